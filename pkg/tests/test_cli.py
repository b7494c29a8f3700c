import json

import pytest

from convkit.cli import main

from synth import SOLVER, TRAIN_NET, write_blob_csv


@pytest.fixture()
def project(tmp_path):
    (tmp_path / "net.prototxt").write_text(TRAIN_NET)
    (tmp_path / "solver.prototxt").write_text(SOLVER.replace("max_epochs: 20", "max_epochs: 4"))
    write_blob_csv(tmp_path / "blobs.csv", n=48, seed=7)
    return tmp_path


def run(tmp_path, *argv, parse_json=False, capsys=None):
    code = main(["--workspace", str(tmp_path / "ws"), *argv])
    out, err = capsys.readouterr()
    if parse_json:
        return code, json.loads(out) if out.strip() else None, err
    return code, out, err


class TestUsage:
    def test_no_arguments_exits_2(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_exits_2(self, capsys):
        assert main(["frobnicate"]) == 2


class TestValidate:
    def test_json_shape_report(self, project, capsys):
        code, body, _ = run(project, "validate", str(project / "net.prototxt"),
                            "--input", "1,1,8,8", "--json", parse_json=True, capsys=capsys)
        assert code == 0
        assert body["ok"] is True
        assert body["report"]["blob_shapes"]["conv1"] == [1, 4, 8, 8]
        assert body["report"]["blob_shapes"]["ip1"] == [1, 2, 1, 1]

    def test_human_output(self, project, capsys):
        code, out, _ = run(project, "validate", str(project / "net.prototxt"),
                           "--input", "1,1,8,8", capsys=capsys)
        assert code == 0
        assert "conv1" in out and "Convolution" in out

    def test_invalid_net_exits_1_with_diagnostics(self, project, capsys):
        bad = project / "bad.prototxt"
        bad.write_text('layer { name: "x" type: "LRN" top: "x" }')
        code, body, _ = run(project, "validate", str(bad), "--json", parse_json=True, capsys=capsys)
        assert code == 1
        assert body["ok"] is False and body["diagnostics"]

    def test_bad_input_flag(self, project, capsys):
        code, _, err = run(project, "validate", str(project / "net.prototxt"),
                           "--input", "1,2", capsys=capsys)
        assert code == 1 and "n,c,h,w" in err


class TestImportSplitTrain:
    def test_full_flow(self, project, capsys):
        code, imported, _ = run(project, "import", str(project / "blobs.csv"),
                                "--json", parse_json=True, capsys=capsys)
        assert code == 0
        assert imported["num_samples"] == 48
        dataset_id = imported["dataset_id"]

        code, splits, _ = run(project, "split", dataset_id, "--fraction", "0.75",
                              "--seed", "3", "--stratified", "--json", parse_json=True, capsys=capsys)
        assert code == 0
        assert splits["train_samples"] == 36 and splits["test_samples"] == 12

        code, trained, _ = run(project, "train", str(project / "net.prototxt"),
                               "--solver", str(project / "solver.prototxt"),
                               "--dataset", dataset_id, "--json", "--quiet",
                               parse_json=True, capsys=capsys)
        assert code == 0
        assert trained["status"] == "completed"
        assert trained["epochs"] == 4

        code, extracted, _ = run(project, "extract", "--model", trained["model_id"],
                                 "--dataset", dataset_id, "--layers", "ip1",
                                 "--json", parse_json=True, capsys=capsys)
        assert code == 0 and "ip1" in extracted["feature_ids"]

        code, metrics, _ = run(project, "test", "--model", trained["model_id"],
                               "--dataset", dataset_id, "--json", parse_json=True, capsys=capsys)
        assert code == 0
        assert sum(sum(row) for row in metrics["confusion"]) == 48

    def test_train_missing_solver_json_error_on_stderr(self, project, capsys):
        code = main(["--workspace", str(project / "ws"), "train", str(project / "net.prototxt"),
                     "--solver", str(project / "missing.prototxt"),
                     "--dataset", "whatever", "--json"])
        out, err = capsys.readouterr()
        assert code == 1
        body = json.loads(err)
        assert body["code"] == "bad_request"
        assert "solver file not found" in body["message"]

    def test_import_unknown_path(self, project, capsys):
        code, _, err = run(project, "import", "/definitely/not/here", capsys=capsys)
        assert code == 1 and "error:" in err

    def test_unknown_dataset_id(self, project, capsys):
        code, _, err = run(project, "split", "nope", "--fraction", "0.5", capsys=capsys)
        assert code == 1 and "unknown dataset" in err


class TestDeterminism:
    def test_two_runs_identical_model_and_loss(self, project, capsys):
        code, imported, _ = run(project, "import", str(project / "blobs.csv"),
                                "--json", parse_json=True, capsys=capsys)
        dataset_id = imported["dataset_id"]
        results = []
        for _ in range(2):
            code, trained, _ = run(project, "train", str(project / "net.prototxt"),
                                   "--solver", str(project / "solver.prototxt"),
                                   "--dataset", dataset_id, "--json", "--quiet",
                                   parse_json=True, capsys=capsys)
            assert code == 0
            results.append(trained)
        assert results[0]["model_id"] == results[1]["model_id"]  # content-hash equality
        assert results[0]["final_loss"] == results[1]["final_loss"]
