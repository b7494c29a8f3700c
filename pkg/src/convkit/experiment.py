"""Experiments over trained models: feature extraction at chosen blobs, an
in-repo one-vs-rest linear SVM, evaluation metrics, and feature-grid tiles.

The SVM minimizes ||w||^2 / (2C) + mean hinge loss by per-sample subgradient
descent with the 1/(lambda*t) step schedule; epochs 0 leaves the zero model,
whose argmax tie-break predicts class 0 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from convkit import engine
from convkit.datastore import Dataset
from convkit.engine import TrainedModel
from convkit.shapes import infer_shapes

__all__ = [
    "FeatureSet",
    "LinearModel",
    "MetricsReport",
    "ExperimentError",
    "extract_features",
    "train_linear",
    "predict_linear",
    "evaluate",
    "test_model",
    "feature_grid",
]

_CHUNK = 64


class ExperimentError(ValueError):
    pass


@dataclass
class FeatureSet:
    layer_name: str
    vectors: np.ndarray  # (num_samples, feature_dim)
    labels: np.ndarray  # (num_samples,)
    blob_shape: tuple[int, int, int]  # (c, h, w) at the tapped blob
    model_checksum: str = ""
    dataset_checksum: str = ""

    def __post_init__(self):
        if len(self.vectors) != len(self.labels):
            raise ExperimentError("vectors and labels disagree in length")

    @property
    def feature_dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass
class LinearModel:
    weights: np.ndarray  # (K, D)
    bias: np.ndarray  # (K,)
    C: float
    epochs: int
    seed: int


@dataclass
class MetricsReport:
    global_accuracy: float
    per_class_accuracy: list[float]
    confusion: np.ndarray  # (K, K) int64, rows = truth
    undefined_classes: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "global_accuracy": self.global_accuracy,
            "per_class_accuracy": list(self.per_class_accuracy),
            "confusion": self.confusion.tolist(),
            "undefined_classes": list(self.undefined_classes),
        }


def extract_features(model: TrainedModel, dataset: Dataset, layers: list[str],
                     model_checksum: str = "") -> list[FeatureSet]:
    """One FeatureSet per requested blob name; row i is sample i's activation
    flattened in (c, h, w) row-major order."""
    if not layers:
        raise ExperimentError("no layers requested")
    report = infer_shapes(model.spec, (1, *model.meta.input_shape))
    for name in layers:
        if name not in report.blob_shapes:
            known = ", ".join(sorted(report.blob_shapes))
            raise ExperimentError(f"unknown layer '{name}' (blobs: {known})")

    X = dataset.features()
    y = dataset.labels()
    collected: dict[str, list[np.ndarray]] = {name: [] for name in layers}
    for start in range(0, len(X), _CHUNK):
        blobs = engine.forward(model, X[start : start + _CHUNK])
        for name in layers:
            collected[name].append(blobs[name].reshape(blobs[name].shape[0], -1))
    out = []
    for name in layers:
        vectors = (
            np.concatenate(collected[name], axis=0)
            if collected[name]
            else np.zeros((0, int(np.prod(report.blob_shapes[name][1:]))))
        )
        out.append(
            FeatureSet(
                layer_name=name,
                vectors=vectors,
                labels=y.copy(),
                blob_shape=tuple(report.blob_shapes[name][1:]),
                model_checksum=model_checksum,
                dataset_checksum=dataset.checksum,
            )
        )
    return out


def train_linear(features: FeatureSet, C: float = 1.0, epochs: int = 50,
                 seed: int = 0, num_classes: int | None = None) -> LinearModel:
    """One-vs-rest linear SVM by seeded per-sample subgradient descent."""
    if C <= 0:
        raise ExperimentError("C must be positive")
    X = np.asarray(features.vectors, dtype=np.float64)
    y = np.asarray(features.labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(y.max()) + 1 if len(y) else 0
    present = np.unique(y)
    if len(present) < 2:
        raise ExperimentError("training a classifier requires at least 2 classes present")

    n, d = X.shape
    lam = 1.0 / C
    W = np.zeros((num_classes, d))
    b = np.zeros(num_classes)
    signs = np.where(y[:, None] == np.arange(num_classes)[None, :], 1.0, -1.0)  # (n, K)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x = X[i]
            margins = signs[i] * (W @ x + b)
            violated = margins < 1.0
            W *= 1.0 - eta * lam
            if violated.any():
                W[violated] += eta * signs[i, violated, None] * x[None, :]
                b[violated] += eta * signs[i, violated]
    return LinearModel(W, b, C=C, epochs=epochs, seed=seed)


def predict_linear(model: LinearModel, vectors: np.ndarray) -> np.ndarray:
    scores = vectors @ model.weights.T + model.bias
    return scores.argmax(axis=1)  # ties resolve to the lowest class index


def evaluate(predictions, truth, num_classes: int) -> MetricsReport:
    predictions = np.asarray(predictions, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if len(predictions) != len(truth):
        raise ExperimentError(
            f"length mismatch: {len(predictions)} predictions vs {len(truth)} truths"
        )
    if len(truth) == 0:
        raise ExperimentError("no samples")
    for arr, what in ((predictions, "prediction"), (truth, "truth")):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ExperimentError(f"{what} class outside [0, {num_classes})")

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (truth, predictions), 1)
    row_sums = confusion.sum(axis=1)
    per_class = []
    undefined = []
    for k in range(num_classes):
        if row_sums[k] == 0:
            per_class.append(0.0)
            undefined.append(k)
        else:
            per_class.append(float(confusion[k, k] / row_sums[k]))
    global_accuracy = float(np.trace(confusion) / len(truth))
    return MetricsReport(global_accuracy, per_class, confusion, undefined)


def test_model(model: TrainedModel, dataset: Dataset) -> MetricsReport:
    """Argmax-softmax predictions per sample, scored against the labels."""
    if len(dataset.class_names) != model.num_classes:
        raise ExperimentError(
            f"dataset has {len(dataset.class_names)} classes but the model"
            f" outputs {model.num_classes}"
        )
    X = dataset.features()
    preds = []
    for start in range(0, len(X), _CHUNK):
        preds.append(engine.predict(model, X[start : start + _CHUNK]))
    predictions = np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)
    return evaluate(predictions, dataset.labels(), model.num_classes)


def feature_grid(feature: np.ndarray) -> np.ndarray:
    """Tile a (c, h, w) activation into the smallest near-square grid of
    min-max normalized h x w maps with 1-pixel 0-valued separators.
    Constant channels render as 0.5; unused grid cells stay 0."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 3:
        raise ExperimentError(f"expected a (c,h,w) feature, got shape {feature.shape}")
    c, h, w = feature.shape
    cols = math.ceil(math.sqrt(c))
    rows = math.ceil(c / cols)
    grid = np.zeros((rows * h + (rows - 1), cols * w + (cols - 1)))
    for ch in range(c):
        tile = feature[ch]
        lo, hi = tile.min(), tile.max()
        norm = np.full((h, w), 0.5) if hi == lo else (tile - lo) / (hi - lo)
        r, cc = divmod(ch, cols)
        grid[r * (h + 1) : r * (h + 1) + h, cc * (w + 1) : cc * (w + 1) + w] = norm
    return grid
