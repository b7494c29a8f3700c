"""Command line over the workbench.

Exit codes: 0 success, 1 domain error, 2 usage error.  ``--json`` switches
every subcommand to machine-readable output; domain errors then print an
ApiError-shaped object to stderr.  The workspace defaults to
``./convkit-workspace`` and can be overridden with --workspace or the
CONVKIT_WORKSPACE environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from convkit.workbench import Workbench, WorkbenchError
from convkit.workspace import NotFoundError

__all__ = ["main", "entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convkit",
        description="Desk-scale CNN workbench: import data, validate nets, train, and experiment.",
    )
    parser.add_argument(
        "--workspace",
        default=None,
        help="workspace directory (default: $CONVKIT_WORKSPACE or ./convkit-workspace)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="import a dataset (folder of class subdirs, or CSV)")
    p.add_argument("path")
    p.add_argument("--format", choices=["folder", "text", "leveldb", "mat", "hdf5"], default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("split", help="split a dataset into train and test parts")
    p.add_argument("dataset_id")
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("validate", help="parse a net file and infer its blob shapes")
    p.add_argument("net")
    p.add_argument("--input", default="1,1,28,28", help="input shape n,c,h,w")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("train", help="train a net on an imported dataset")
    p.add_argument("net")
    p.add_argument("--solver", required=True, help="solver file")
    p.add_argument("--dataset", required=True, help="dataset id in the workspace")
    p.add_argument("--json", action="store_true")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("extract", help="extract features at chosen blobs")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--layers", required=True, help="comma-separated blob names")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("test", help="score a trained model against a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8420)
    p.add_argument("--workers", type=int, default=None, help="task hub worker count")

    return parser


def _workspace_path(args) -> str:
    return args.workspace or os.environ.get("CONVKIT_WORKSPACE") or "./convkit-workspace"


def _emit(args, payload: dict, human: str):
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def _parse_shape(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise WorkbenchError(f"--input must be n,c,h,w; got '{text}'")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise WorkbenchError(f"--input must be four integers; got '{text}'") from None


def _read_file(path: str, what: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise WorkbenchError(f"{what} file not found: {path}")
    return p.read_text(encoding="utf-8")


def _run(args, bench: Workbench) -> int:
    if args.command == "import":
        result = bench.import_dataset(args.path, args.format)
        _emit(args, result,
              f"imported dataset {result['dataset_id']}"
              f" ({result['num_samples']} samples, {len(result['classes'])} classes)")
        return 0

    if args.command == "split":
        result = bench.split_dataset(args.dataset_id, args.fraction, args.seed, args.stratified)
        _emit(args, result,
              f"train {result['train_id']} ({result['train_samples']} samples),"
              f" test {result['test_id']} ({result['test_samples']} samples)")
        return 0

    if args.command == "validate":
        source = _read_file(args.net, "net")
        result = bench.validate_net(source, _parse_shape(args.input))
        if getattr(args, "json", False):
            print(json.dumps(result, sort_keys=True))
        else:
            for diag in result["diagnostics"]:
                span = diag["span"]
                print(f"{diag['severity']}: {diag['message']} at {span['line']}:{span['col']}")
            if result["ok"]:
                for layer in result["layers"]:
                    shape = "x".join(str(d) for d in layer["output_shape"])
                    print(f"{layer['name']:<16} {layer['kind']:<16} -> {shape}"
                          f"  params={layer['param_count']}")
        return 0 if result["ok"] else 1

    if args.command == "train":
        net_source = _read_file(args.net, "net")
        solver_source = _read_file(args.solver, "solver")
        net_id = bench.save_net(net_source)
        record = bench.submit_train(net_id, args.dataset, solver_source=solver_source)
        if not args.quiet and not getattr(args, "json", False):
            _stream_progress(bench, record.id)
        final = bench.hub.wait_task(record.id, timeout=600.0)
        if final.state == "failed":
            raise WorkbenchError(final.error or "training failed")
        result = dict(final.result)
        result["task_id"] = final.id
        result["net_id"] = net_id
        _emit(args, result,
              f"model {result['model_id']} ({result['status']}, {result['epochs']} epochs,"
              f" loss {result['final_loss']:.6f}, train accuracy {result['train_accuracy']:.3f})")
        return 0

    if args.command == "extract":
        layers = [name for name in args.layers.split(",") if name]
        record = bench.submit_extract(args.model, args.dataset, layers)
        final = bench.hub.wait_task(record.id)
        if final.state != "succeeded":
            raise WorkbenchError(final.error or "extraction did not complete")
        _emit(args, final.result,
              "features: " + ", ".join(f"{k}={v}" for k, v in final.result["feature_ids"].items()))
        return 0

    if args.command == "test":
        record = bench.submit_test(args.model, args.dataset)
        final = bench.hub.wait_task(record.id)
        if final.state != "succeeded":
            raise WorkbenchError(final.error or "testing did not complete")
        metrics = final.result["metrics"]
        human = [f"global accuracy {metrics['global_accuracy']:.4f}"]
        for k, acc in enumerate(metrics["per_class_accuracy"]):
            human.append(f"  class {k}: {acc:.4f}")
        human.append("confusion: " + json.dumps(metrics["confusion"]))
        _emit(args, metrics, "\n".join(human))
        return 0

    if args.command == "serve":
        import uvicorn

        from convkit.gateway import create_app

        app = create_app(bench)
        print(f"serving on http://{args.host}:{args.port}  (workspace: {bench.workspace.root})")
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    raise WorkbenchError(f"unknown command {args.command!r}")  # pragma: no cover


def _stream_progress(bench: Workbench, task_id: str):
    import threading

    def pump():
        cursor = 0
        while True:
            events, floor = bench.hub.wait_feed(cursor, timeout=0.5)
            cursor = max(cursor, floor)
            for note in events:
                cursor = note.sequence
                if note.task_id != task_id:
                    continue
                if note.event == "progress":
                    loss = note.payload.get("loss")
                    epoch = note.payload.get("epoch")
                    print(f"\r  epoch {epoch}  loss {loss:.5f}  "
                          f"{100 * note.payload['progress']:.0f}%", end="", file=sys.stderr)
                elif note.event in ("finished", "failed", "stopped"):
                    print("", file=sys.stderr)
                    return

    threading.Thread(target=pump, daemon=True).start()


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    bench = Workbench(_workspace_path(args), workers=getattr(args, "workers", None))
    try:
        return _run(args, bench)
    except (WorkbenchError, NotFoundError, ValueError) as exc:
        message = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        if getattr(args, "json", False):
            print(json.dumps({"code": "bad_request", "message": message}), file=sys.stderr)
        else:
            print(f"error: {message}", file=sys.stderr)
        return 1
    finally:
        bench.close()


def entry():  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":
    entry()
