"""Record real gateway responses as JSON fixtures for the frontend tests.

Run from the repo root:  python3 scripts/record_ui_fixtures.py
Writes frontend/test/fixtures/*.json.
"""

import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from convkit.experiment import evaluate  # noqa: E402
from convkit.gateway import create_app  # noqa: E402
from convkit.workbench import Workbench  # noqa: E402

from synth import SOLVER, TRAIN_NET, write_blob_csv  # noqa: E402

OUT = ROOT / "frontend" / "test" / "fixtures"


def wait_task(client, task_id):
    while True:
        task = client.get(f"/tasks/{task_id}").json()["task"]
        if task["state"] in ("succeeded", "failed", "stopped"):
            return task
        time.sleep(0.01)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        bench = Workbench(tmp / "ws", workers=1)
        client = TestClient(create_app(bench))
        csv_path = tmp / "blobs.csv"
        write_blob_csv(csv_path, n=48, seed=7)

        # -- net validation (drives the net graph view)
        validate = client.post(
            "/nets/validate", json={"source": TRAIN_NET, "input_shape": [1, 1, 8, 8]}
        ).json()
        (OUT / "validate_net.json").write_text(json.dumps(validate, indent=2))

        broken = client.post(
            "/nets/validate",
            json={"source": TRAIN_NET.replace('type: "ReLU"', 'type: "LRN"')},
        ).json()
        (OUT / "validate_net_error.json").write_text(json.dumps(broken, indent=2))

        # -- completion responses for five scripted cursor positions
        cursors = []
        src_conv = "layer { convolution_param {  } }"
        cursors.append({"name": "inside_convolution_param", "source": src_conv,
                        "line": 1, "column": src_conv.index("{  }") + 3})
        cursors.append({"name": "empty_document", "source": "", "line": 1, "column": 1})
        src_type = 'layer { type: "" }'
        cursors.append({"name": "type_value", "source": src_type,
                        "line": 1, "column": src_type.index('""') + 2})
        src_layer = "layer {  }"
        cursors.append({"name": "layer_scope", "source": src_layer, "line": 1, "column": 9})
        src_pool = "layer { pooling_param { pool:  } }"
        cursors.append({"name": "pool_enum", "source": src_pool,
                        "line": 1, "column": src_pool.index("pool:") + 7})
        recorded = []
        for cursor in cursors:
            resp = client.post("/nets/complete", json={
                "source": cursor["source"], "line": cursor["line"], "column": cursor["column"],
            }).json()
            recorded.append({**cursor, "suggestions": resp["suggestions"]})
        (OUT / "completions.json").write_text(json.dumps(recorded, indent=2))

        # -- a full training run's notification stream
        dataset_id = wait_task(
            client,
            client.post("/datasets/import", json={"path": str(csv_path)}).json()["task"]["id"],
        )["result"]["dataset_id"]
        net_id = client.post("/nets", json={"source": TRAIN_NET}).json()["id"]
        solver = SOLVER.replace("max_epochs: 20", "max_epochs: 3")
        train_task = client.post(
            "/train", json={"net_id": net_id, "dataset_id": dataset_id, "solver_source": solver}
        ).json()["task"]
        final = wait_task(client, train_task["id"])
        feed = client.get("/notifications", params={"after": 0, "timeout": 0}).json()
        train_events = [e for e in feed["events"] if e["task_id"] == train_task["id"]]
        (OUT / "train_notifications.json").write_text(json.dumps({
            "task": final,
            "events": train_events,
            # a reconnecting client re-reads from an older cursor: the second
            # chunk overlaps the first and must deduplicate
            "first_chunk": train_events[: max(1, len(train_events) // 2)],
            "reconnect_chunk": train_events[max(0, len(train_events) // 2 - 2):],
        }, indent=2))

        # -- metrics: the hand fixture (truth 0,0,1,1 vs predictions 0,1,1,1)
        metrics = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2).to_json()
        (OUT / "metrics_hand_fixture.json").write_text(json.dumps({
            "metrics": metrics, "class_names": ["northwest", "southeast"],
        }, indent=2))

        # -- a real test-task result and an 8-channel feature grid
        test_task = client.post(
            "/experiments/test",
            json={"model_id": final["result"]["model_id"], "dataset_id": dataset_id},
        ).json()["task"]
        (OUT / "metrics_real.json").write_text(
            json.dumps(wait_task(client, test_task["id"])["result"], indent=2))

        wide_net = TRAIN_NET.replace("num_output: 4", "num_output: 8")
        wide_id = client.post("/nets", json={"source": wide_net}).json()["id"]
        wide_final = wait_task(client, client.post(
            "/train", json={"net_id": wide_id, "dataset_id": dataset_id, "solver_source": solver}
        ).json()["task"]["id"])
        extract_task = client.post("/experiments/extract", json={
            "model_id": wide_final["result"]["model_id"],
            "dataset_id": dataset_id, "layers": ["conv1"],
        }).json()["task"]
        feature_id = wait_task(client, extract_task["id"])["result"]["feature_ids"]["conv1"]
        grid = client.get(f"/features/{feature_id}/grid", params={"sample": 0}).json()
        (OUT / "feature_grid_8ch.json").write_text(json.dumps(grid, indent=2))

        bench.close()
    print(f"fixtures written to {OUT}")
    for path in sorted(OUT.glob("*.json")):
        print(" ", path.name)


if __name__ == "__main__":
    main()
