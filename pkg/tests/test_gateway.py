import pytest
from fastapi.testclient import TestClient

from convkit.gateway import create_app
from convkit.workbench import Workbench

from synth import SOLVER, TRAIN_NET, write_blob_csv

CONV_FIXTURE = (
    'input: "data"\n'
    'layer { name: "c1" type: "Convolution" bottom: "data" top: "c1"'
    " convolution_param { num_output: 8 kernel_size: 5 } }"
)


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    bench = Workbench(root / "workspace", workers=2)
    csv_path = root / "blobs.csv"
    write_blob_csv(csv_path, n=64, seed=7)
    with TestClient(create_app(bench), raise_server_exceptions=False) as client:
        yield client, bench, csv_path
    bench.close()


def import_dataset(client, csv_path):
    resp = client.post("/datasets/import", json={"path": str(csv_path)})
    assert resp.status_code == 200
    task = resp.json()["task"]
    return wait_task(client, task["id"])["result"]["dataset_id"]


def wait_task(client, task_id):
    import time

    deadline = time.monotonic() + 60
    while time.monotonic() < deadline:
        data = client.get(f"/tasks/{task_id}").json()["task"]
        if data["state"] in ("succeeded", "failed", "stopped"):
            return data
        time.sleep(0.01)
    raise AssertionError("task did not finish")


class TestNets:
    def test_validate_conv_fixture(self, env):
        client, _, _ = env
        resp = client.post("/nets/validate", json={"source": CONV_FIXTURE})
        assert resp.status_code == 200
        body = resp.json()
        assert body["ok"] is True
        assert body["report"]["blob_shapes"]["c1"] == [1, 8, 24, 24]
        assert body["layers"][0]["color"] == 1

    def test_validate_reports_diagnostics(self, env):
        client, _, _ = env
        resp = client.post("/nets/validate", json={"source": 'layer { name: "x" }'})
        body = resp.json()
        assert resp.status_code == 200 and body["ok"] is False
        assert body["diagnostics"] and body["report"] is None
        assert all("span" in d for d in body["diagnostics"])

    def test_complete(self, env):
        client, _, _ = env
        source = "layer { convolution_param {  } }"
        column = source.index("{  }") + 3  # 1-based column between the braces
        resp = client.post(
            "/nets/complete",
            json={"source": source, "line": 1, "column": column},
        )
        assert resp.json()["suggestions"] == ["kernel_size", "num_output", "pad", "stride"]

    def test_save_and_deploy(self, env):
        client, _, _ = env
        resp = client.post("/nets", json={"source": TRAIN_NET})
        net_id = resp.json()["id"]
        resp = client.post(f"/nets/{net_id}/deploy")
        assert resp.status_code == 200
        deployed = resp.json()
        assert 'type: "Softmax"' in deployed["source"]
        assert "Accuracy" not in deployed["source"]
        assert client.get(f"/nets/{deployed['id']}").json()["source"] == deployed["source"]

    def test_save_invalid_net_is_bad_request(self, env):
        client, _, _ = env
        resp = client.post("/nets", json={"source": "}"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "bad_request" and "message" in body


class TestDatasets:
    def test_import_list_split(self, env):
        client, _, csv_path = env
        dataset_id = import_dataset(client, csv_path)
        listing = client.get("/datasets").json()["datasets"]
        assert any(d["id"] == dataset_id for d in listing)
        meta = client.get(f"/datasets/{dataset_id}").json()
        assert meta["num_samples"] == 64
        resp = client.post(
            f"/datasets/{dataset_id}/split",
            json={"train_fraction": 0.75, "seed": 3, "stratified": True},
        )
        body = resp.json()
        assert body["train_samples"] == 48 and body["test_samples"] == 16

    def test_import_bad_path(self, env):
        client, _, _ = env
        resp = client.post("/datasets/import", json={"path": "/nowhere/at/all"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_request"

    def test_unknown_dataset_404(self, env):
        client, _, _ = env
        resp = client.get("/datasets/doesnotexist")
        assert resp.status_code == 404
        assert resp.json()["code"] == "not_found"


@pytest.fixture(scope="module")
def trained_ids(env):
    client, _, csv_path = env
    dataset_id = import_dataset(client, csv_path)
    net_id = client.post("/nets", json={"source": TRAIN_NET}).json()["id"]
    short_solver = SOLVER.replace("max_epochs: 20", "max_epochs: 6")
    resp = client.post(
        "/train",
        json={"net_id": net_id, "dataset_id": dataset_id, "solver_source": short_solver},
    )
    assert resp.status_code == 200
    task = wait_task(client, resp.json()["task"]["id"])
    assert task["state"] == "succeeded", task
    return dataset_id, net_id, task["result"]["model_id"], task


class TestTrainPipeline:
    def test_train_succeeds_and_model_metadata(self, env, trained_ids):
        client, _, _ = env
        _, _, model_id, task = trained_ids
        assert task["result"]["train_accuracy"] >= 0.9
        meta = client.get(f"/models/{model_id}").json()
        assert meta["classes"] == ["northwest", "southeast"]
        assert meta["input_shape"] == [1, 8, 8]

    def test_notifications_during_training_are_gapless(self, env, trained_ids):
        client, _, _ = env
        resp = client.get("/notifications", params={"after": 0, "timeout": 0})
        body = resp.json()
        seqs = [e["sequence"] for e in body["events"]]
        assert seqs == list(range(body["floor"] + 1, body["floor"] + 1 + len(seqs)))
        train_events = [
            e["event"] for e in body["events"]
            if e["task_id"] == trained_ids[3]["id"]
        ]
        assert train_events[0] == "started"
        assert train_events[-1] == "finished"
        assert "progress" in train_events

    def test_extract_and_grid(self, env, trained_ids):
        client, _, _ = env
        dataset_id, _, model_id, _ = trained_ids
        resp = client.post(
            "/experiments/extract",
            json={"model_id": model_id, "dataset_id": dataset_id, "layers": ["ip1", "conv1"]},
        )
        task = wait_task(client, resp.json()["task"]["id"])
        feature_ids = task["result"]["feature_ids"]
        assert set(feature_ids) == {"ip1", "conv1"}
        grid = client.get(f"/features/{feature_ids['conv1']}/grid", params={"sample": 0}).json()
        assert grid["channels"] == 4
        assert grid["height"] == 2 * 8 + 1 and grid["width"] == 2 * 8 + 1
        assert len(grid["values"]) == grid["height"] * grid["width"]

    def test_test_endpoint_metrics(self, env, trained_ids):
        client, _, _ = env
        dataset_id, _, model_id, _ = trained_ids
        resp = client.post("/experiments/test", json={"model_id": model_id, "dataset_id": dataset_id})
        task = wait_task(client, resp.json()["task"]["id"])
        metrics = task["result"]["metrics"]
        confusion = metrics["confusion"]
        assert sum(sum(row) for row in confusion) == 64
        assert metrics["global_accuracy"] >= 0.9

    def test_snapshot_checkpoint_written_when_enabled(self, env):
        client, bench, csv_path = env
        dataset_id = import_dataset(client, csv_path)
        net_id = client.post("/nets", json={"source": TRAIN_NET}).json()["id"]
        solver = SOLVER.replace("max_epochs: 20", "max_epochs: 2") + "snapshot_every: 1\n"
        resp = client.post(
            "/train",
            json={"net_id": net_id, "dataset_id": dataset_id, "solver_source": solver},
        )
        task = wait_task(client, resp.json()["task"]["id"])
        assert task["state"] == "succeeded"
        assert task["result"]["snapshot_file"] == f"snapshot-{task['id']}.model"
        snapshot_path = bench.workspace.root / "models" / task["result"]["snapshot_file"]
        assert snapshot_path.exists()
        from convkit.engine import load_model

        checkpoint = load_model(snapshot_path)
        assert checkpoint.meta.status == "snapshot"
        assert checkpoint.meta.epochs == 2  # last boundary checkpoint

    def test_long_poll_waits_for_new_events(self, env, trained_ids):
        client, _, csv_path = env
        latest = client.get("/notifications", params={"after": 0, "timeout": 0}).json()["latest"]
        import threading

        def poke():
            import time

            time.sleep(0.1)
            client.post("/datasets/import", json={"path": str(csv_path)})

        threading.Thread(target=poke).start()
        resp = client.get("/notifications", params={"after": latest, "timeout": 5})
        assert resp.json()["events"]


class TestTasks:
    def test_cancel_unknown_task_404(self, env):
        client, _, _ = env
        resp = client.post("/tasks/unknown/cancel")
        assert resp.status_code == 404
        body = resp.json()
        assert body["code"] == "not_found"

    def test_bad_request_body_is_api_error(self, env):
        client, _, _ = env
        resp = client.post("/nets/validate", json={"nonsense": 1})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "bad_request" and "details" in body

    def test_tasks_listing(self, env):
        client, _, _ = env
        listing = client.get("/tasks").json()["tasks"]
        assert all(t["schema_version"] == 1 for t in listing)


class TestCliHttpParity:
    def test_validate_identical_between_surfaces(self, env):
        client, bench, _ = env
        via_http = client.post(
            "/nets/validate", json={"source": CONV_FIXTURE, "input_shape": [1, 1, 28, 28]}
        ).json()
        via_module = bench.validate_net(CONV_FIXTURE, (1, 1, 28, 28))
        assert via_http == via_module
