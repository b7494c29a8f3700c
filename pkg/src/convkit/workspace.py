"""Workspace directory: content-addressed storage for datasets, nets, models,
and feature sets, with a versioned JSON index.

Layout:
    <root>/index.json
    <root>/tasks/<id>.json      (written by the task hub)
    <root>/datasets/<id>.csv    (the text dialect; bit-exact floats)
    <root>/nets/<id>.prototxt
    <root>/models/<id>.model    (ESPRMDL1 container)
    <root>/features/<id>.libsvm + <id>.json sidecar

Identifiers are truncated SHA-256 content hashes, so re-saving identical
content deduplicates.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

import numpy as np

from convkit import engine
from convkit.datastore import Dataset, export_text, import_text, export_libsvm, read_libsvm
from convkit.experiment import FeatureSet

__all__ = ["NotFoundError", "Workspace"]

_INDEX_VERSION = 1


class NotFoundError(KeyError):
    pass


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


class Workspace:
    """Thread-safe artifact store; one instance per directory."""

    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.Lock()
        for sub in ("tasks", "datasets", "nets", "models", "features"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"
        if self._index_path.exists():
            self._index = json.loads(self._index_path.read_text(encoding="utf-8"))
        else:
            self._index = {
                "version": _INDEX_VERSION,
                "datasets": {},
                "nets": {},
                "models": {},
                "features": {},
            }
            self._write_index()

    def _write_index(self):
        tmp = self._index_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self._index, indent=2, sort_keys=True), encoding="utf-8")
        tmp.replace(self._index_path)

    def _register(self, section: str, artifact_id: str, meta: dict):
        with self._lock:
            self._index[section][artifact_id] = meta
            self._write_index()

    def meta(self, section: str, artifact_id: str) -> dict:
        meta = self._index[section].get(artifact_id)
        if meta is None:
            raise NotFoundError(f"unknown {section[:-1]} '{artifact_id}'")
        return meta

    def list(self, section: str) -> dict:
        with self._lock:
            return {k: dict(v) for k, v in self._index[section].items()}

    # -- datasets -----------------------------------------------------------

    def save_dataset(self, dataset: Dataset) -> str:
        artifact_id = dataset.checksum[:16]
        path = self.root / "datasets" / f"{artifact_id}.csv"
        if not path.exists():
            export_text(dataset, path)
        c, h, w = dataset.sample_shape
        self._register(
            "datasets",
            artifact_id,
            {
                "classes": list(dataset.class_names),
                "num_samples": len(dataset),
                "shape": [c, h, w],
                "provenance": dataset.provenance,
                "checksum": dataset.checksum,
            },
        )
        return artifact_id

    def load_dataset(self, artifact_id: str) -> Dataset:
        meta = self.meta("datasets", artifact_id)
        path = self.root / "datasets" / f"{artifact_id}.csv"
        if not path.exists():
            raise NotFoundError(f"dataset file missing for '{artifact_id}'")
        dataset = import_text(path)
        # restore identity: the CSV round trip is exact but provenance lives here
        dataset.provenance = meta["provenance"]
        dataset.checksum = meta["checksum"]
        return dataset

    # -- nets ----------------------------------------------------------------

    def save_net(self, source: str) -> str:
        artifact_id = _hash_bytes(source.encode("utf-8"))
        path = self.root / "nets" / f"{artifact_id}.prototxt"
        if not path.exists():
            path.write_text(source, encoding="utf-8")
        self._register("nets", artifact_id, {"bytes": len(source)})
        return artifact_id

    def load_net(self, artifact_id: str) -> str:
        self.meta("nets", artifact_id)
        path = self.root / "nets" / f"{artifact_id}.prototxt"
        if not path.exists():
            raise NotFoundError(f"net file missing for '{artifact_id}'")
        return path.read_text(encoding="utf-8")

    # -- models ---------------------------------------------------------------

    def save_model(self, model: engine.TrainedModel) -> str:
        blob = engine.save_model_bytes(model)
        artifact_id = _hash_bytes(blob)
        path = self.root / "models" / f"{artifact_id}.model"
        if not path.exists():
            path.write_bytes(blob)
        self._register(
            "models",
            artifact_id,
            {
                "status": model.meta.status,
                "final_loss": model.meta.final_loss,
                "epochs": model.meta.epochs,
                "classes": list(model.meta.class_names),
                "input_shape": list(model.meta.input_shape),
            },
        )
        return artifact_id

    def load_model(self, artifact_id: str) -> engine.TrainedModel:
        self.meta("models", artifact_id)
        path = self.root / "models" / f"{artifact_id}.model"
        if not path.exists():
            raise NotFoundError(f"model file missing for '{artifact_id}'")
        return engine.load_model(path)

    # -- feature sets ----------------------------------------------------------

    def save_features(self, features: FeatureSet) -> str:
        rows = [(features.vectors[i], int(features.labels[i])) for i in range(len(features.labels))]
        sidecar = {
            "layer_name": features.layer_name,
            "blob_shape": list(features.blob_shape),
            "feature_dim": features.feature_dim,
            "num_samples": int(len(features.labels)),
            "model_checksum": features.model_checksum,
            "dataset_checksum": features.dataset_checksum,
        }
        digest = hashlib.sha256()
        digest.update(json.dumps(sidecar, sort_keys=True).encode())
        digest.update(features.vectors.tobytes())
        digest.update(np.asarray(features.labels, dtype=np.int64).tobytes())
        artifact_id = digest.hexdigest()[:16]
        data_path = self.root / "features" / f"{artifact_id}.libsvm"
        meta_path = self.root / "features" / f"{artifact_id}.json"
        if not data_path.exists():
            export_libsvm(rows, data_path)
            meta_path.write_text(json.dumps(sidecar, sort_keys=True), encoding="utf-8")
        self._register("features", artifact_id, sidecar)
        return artifact_id

    def load_features(self, artifact_id: str) -> FeatureSet:
        meta = self.meta("features", artifact_id)
        data_path = self.root / "features" / f"{artifact_id}.libsvm"
        if not data_path.exists():
            raise NotFoundError(f"feature file missing for '{artifact_id}'")
        rows = read_libsvm(data_path, n_features=meta["feature_dim"])
        if rows:
            vectors = np.stack([vec for vec, _ in rows])
            labels = np.array([label for _, label in rows], dtype=np.int64)
        else:
            vectors = np.zeros((0, meta["feature_dim"]))
            labels = np.zeros(0, dtype=np.int64)
        return FeatureSet(
            layer_name=meta["layer_name"],
            vectors=vectors,
            labels=labels,
            blob_shape=tuple(meta["blob_shape"]),
            model_checksum=meta["model_checksum"],
            dataset_checksum=meta["dataset_checksum"],
        )
