"""Facade tying the modules together: the CLI and the HTTP gateway are both
thin adapters over these calls, so the two surfaces cannot drift apart."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from convkit import datastore, engine, experiment
from convkit.netdef import (
    SolverConfig,
    completion_context,
    derive_deploy,
    parse_net,
    parse_solver,
    serialize_net,
)
from convkit.shapes import ShapeError, infer_shapes
from convkit.taskhub import TaskHub, TaskRecord
from convkit.workspace import Workspace

__all__ = ["WorkbenchError", "Workbench"]

DEFAULT_INPUT_SHAPE = (1, 1, 28, 28)


class WorkbenchError(ValueError):
    pass


class Workbench:
    def __init__(self, workspace_path, workers: int | None = None):
        self.workspace = Workspace(workspace_path)
        self.hub = TaskHub(workspace_dir=self.workspace.root, workers=workers)

    def close(self):
        self.hub.shutdown(wait=True)

    # -- nets -----------------------------------------------------------------

    def validate_net(self, source: str, input_shape=None) -> dict:
        """Diagnostics plus (on success) the shape report and a layer summary."""
        input_shape = tuple(input_shape or DEFAULT_INPUT_SHAPE)
        spec, diagnostics = parse_net(source)
        payload = {
            "ok": spec is not None,
            "diagnostics": [d.to_json() for d in diagnostics],
            "report": None,
            "layers": None,
            "input_shape": list(input_shape),
        }
        if spec is None:
            return payload
        try:
            report = infer_shapes(spec, input_shape)
        except ShapeError as exc:
            payload["ok"] = False
            payload["diagnostics"].append(exc.diagnostic.to_json())
            return payload
        payload["report"] = report.to_json()
        payload["layers"] = [
            {
                "name": layer.name,
                "kind": layer.kind,
                "color": report.layer_colors[layer.name],
                "tops": list(layer.tops),
                "bottoms": list(layer.bottoms),
                "output_shape": list(report.blob_shapes[layer.tops[0]]) if layer.tops else None,
                "param_count": report.param_counts[layer.name],
            }
            for layer in spec.layers
        ]
        return payload

    def complete(self, source: str, line: int, column: int) -> list[str]:
        return completion_context(source, (line, column))

    def save_net(self, source: str) -> str:
        spec, diagnostics = parse_net(source)
        if spec is None:
            raise WorkbenchError(
                "net does not validate: " + "; ".join(d.message for d in diagnostics if d.severity == "error")
            )
        return self.workspace.save_net(source)

    def get_net(self, net_id: str) -> str:
        return self.workspace.load_net(net_id)

    def deploy_net(self, net_id: str) -> dict:
        source = self.workspace.load_net(net_id)
        spec, diagnostics = parse_net(source)
        if spec is None:
            raise WorkbenchError("stored net no longer parses: " + diagnostics[0].message)
        deploy_text = serialize_net(derive_deploy(spec))
        deploy_id = self.workspace.save_net(deploy_text)
        return {"id": deploy_id, "source": deploy_text}

    # -- datasets ---------------------------------------------------------------

    def submit_import(self, path: str, format_tag: str | None = None) -> TaskRecord:
        path = str(path)
        if format_tag is None:
            plugin = datastore.resolve_format(path)
        else:
            plugin = datastore.get_plugin(format_tag)

        def body(ctx):
            dataset = plugin.reader(path, progress=lambda p: ctx.progress(p), cancelled=ctx.cancelled)
            dataset_id = self.workspace.save_dataset(dataset)
            return {
                "dataset_id": dataset_id,
                "num_samples": len(dataset),
                "classes": list(dataset.class_names),
                "checksum": dataset.checksum,
            }

        return self.hub.submit("import", body, {"path": path, "format": plugin.tag})

    def import_dataset(self, path: str, format_tag: str | None = None) -> dict:
        """Synchronous import (runs through the hub so events still flow)."""
        record = self.hub.wait_task(self.submit_import(path, format_tag).id)
        if record.state != "succeeded":
            raise WorkbenchError(record.error or "import did not complete")
        return record.result

    def list_datasets(self) -> list[dict]:
        listing = self.workspace.list("datasets")
        return [{"id": key, **meta} for key, meta in sorted(listing.items())]

    def dataset_meta(self, dataset_id: str) -> dict:
        meta = self.workspace.meta("datasets", dataset_id)
        return {"id": dataset_id, **meta}

    def split_dataset(self, dataset_id: str, train_fraction: float, seed: int,
                      stratified: bool = False) -> dict:
        dataset = self.workspace.load_dataset(dataset_id)
        train, test = datastore.split(
            dataset, datastore.SplitSpec(train_fraction, seed=seed, stratified=stratified)
        )
        return {
            "train_id": self.workspace.save_dataset(train),
            "test_id": self.workspace.save_dataset(test),
            "train_samples": len(train),
            "test_samples": len(test),
        }

    # -- training ---------------------------------------------------------------

    def _solver_from(self, solver_source: str | None, solver_values: dict | None) -> SolverConfig:
        if solver_source is not None:
            config, diagnostics = parse_solver(solver_source)
            if config is None:
                raise WorkbenchError(
                    "solver does not validate: "
                    + "; ".join(d.message for d in diagnostics if d.severity == "error")
                )
            return config
        if solver_values is not None:
            try:
                return SolverConfig(**solver_values)
            except TypeError as exc:
                raise WorkbenchError(f"bad solver field: {exc}") from exc
        return SolverConfig()

    def submit_train(self, net_id: str, dataset_id: str, solver_source: str | None = None,
                     solver_values: dict | None = None) -> TaskRecord:
        source = self.workspace.load_net(net_id)
        spec, diagnostics = parse_net(source)
        if spec is None:
            raise WorkbenchError("net does not validate: " + diagnostics[0].message)
        config = self._solver_from(solver_source, solver_values)
        dataset = self.workspace.load_dataset(dataset_id)

        def body(ctx):
            n = len(dataset)
            iters_per_epoch = -(-n // config.batch_size)
            total = max(1, config.max_epochs * iters_per_epoch)
            last_loss = [0.0]

            def on_progress(tp: engine.TrainProgress):
                last_loss[0] = tp.loss
                ctx.progress(
                    tp.iteration / total,
                    payload={"epoch": tp.epoch, "iteration": tp.iteration, "loss": tp.loss},
                    eta=tp.eta_seconds,
                )

            snapshot_path = self.workspace.root / "models" / f"snapshot-{ctx.task_id}.model"
            deploy_spec = derive_deploy(spec)

            def on_snapshot(epoch: int, weights):
                # crash-recovery checkpoint; overwritten each boundary and
                # never registered in the artifact index
                checkpoint = engine.TrainedModel(
                    spec=deploy_spec,
                    weights=weights,
                    meta=engine.TrainingMeta(
                        solver=config,
                        final_loss=last_loss[0],
                        epochs=epoch,
                        status="snapshot",
                        class_names=list(dataset.class_names),
                        input_shape=dataset.sample_shape,
                    ),
                )
                engine.save_model(checkpoint, snapshot_path)

            model = engine.train(spec, config, dataset, progress=on_progress,
                                 cancelled=ctx.cancelled, snapshot=on_snapshot)
            model_id = self.workspace.save_model(model)
            report = experiment.test_model(model, dataset)
            return {
                "model_id": model_id,
                "final_loss": model.meta.final_loss,
                "epochs": model.meta.epochs,
                "status": model.meta.status,
                "train_accuracy": report.global_accuracy,
                "snapshot_file": snapshot_path.name if snapshot_path.exists() else None,
            }

        description = {"net_id": net_id, "dataset_id": dataset_id, "max_epochs": config.max_epochs}
        return self.hub.submit("train", body, description)

    def train_sync(self, net_id: str, dataset_id: str, solver_source: str | None = None,
                   solver_values: dict | None = None, timeout: float = 600.0) -> dict:
        record = self.hub.wait_task(
            self.submit_train(net_id, dataset_id, solver_source, solver_values).id, timeout=timeout
        )
        if record.state == "failed":
            raise WorkbenchError(record.error or "training failed")
        return record.result

    def model_meta(self, model_id: str) -> dict:
        model = self.workspace.load_model(model_id)
        return {
            "id": model_id,
            "net_source": serialize_net(model.spec),
            "classes": list(model.meta.class_names),
            "input_shape": list(model.meta.input_shape),
            "final_loss": model.meta.final_loss,
            "epochs": model.meta.epochs,
            "status": model.meta.status,
            "solver": model.meta.solver.__dict__,
        }

    # -- experiments ---------------------------------------------------------------

    def submit_extract(self, model_id: str, dataset_id: str, layers: list[str]) -> TaskRecord:
        model = self.workspace.load_model(model_id)
        dataset = self.workspace.load_dataset(dataset_id)
        if not layers:
            raise WorkbenchError("no layers requested")

        def body(ctx):
            feature_ids = {}
            sets = experiment.extract_features(model, dataset, layers, model_checksum=model_id)
            for i, feats in enumerate(sets):
                ctx.check_cancelled()
                feature_ids[feats.layer_name] = self.workspace.save_features(feats)
                ctx.progress((i + 1) / len(sets), payload={"layer": feats.layer_name})
            return {"feature_ids": feature_ids}

        description = {"model_id": model_id, "dataset_id": dataset_id, "layers": layers}
        return self.hub.submit("extract", body, description)

    def submit_test(self, model_id: str, dataset_id: str) -> TaskRecord:
        model = self.workspace.load_model(model_id)
        dataset = self.workspace.load_dataset(dataset_id)
        if len(dataset.class_names) != model.num_classes:
            raise WorkbenchError(
                f"dataset has {len(dataset.class_names)} classes but the model"
                f" outputs {model.num_classes}"
            )

        def body(ctx):
            report = experiment.test_model(model, dataset)
            ctx.progress(1.0)
            return {"metrics": report.to_json()}

        return self.hub.submit("test", body, {"model_id": model_id, "dataset_id": dataset_id})

    def feature_grid(self, feature_id: str, sample_index: int) -> dict:
        feats = self.workspace.load_features(feature_id)
        if not 0 <= sample_index < len(feats.labels):
            raise WorkbenchError(
                f"sample {sample_index} out of range [0, {len(feats.labels)})"
            )
        c, h, w = feats.blob_shape
        grid = experiment.feature_grid(feats.vectors[sample_index].reshape(c, h, w))
        return {
            "sample": sample_index,
            "layer": feats.layer_name,
            "label": int(feats.labels[sample_index]),
            "channels": c,
            "tile_height": h,
            "tile_width": w,
            "height": grid.shape[0],
            "width": grid.shape[1],
            "values": [float(v) for v in np.asarray(grid).ravel()],
        }
