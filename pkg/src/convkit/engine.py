"""Desk-scale CNN execution and training.

Tensors are float64 numpy arrays in (n, c, h, w) layout.  A net runs as a
straight-line program over its layer list; blob names are versioned so
in-place layers (top == bottom) and fan-out both backpropagate correctly.
Training is plain mini-batch SGD with momentum, weight decay, and a fixed or
step learning-rate policy; identical (spec, config, dataset, seed) reproduce
the run bit-for-bit.
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from convkit import kernels
from convkit.netdef import NetSpec, SolverConfig, derive_deploy, serialize_net, serialize_solver, parse_net, parse_solver
from convkit.shapes import ShapeReport, infer_shapes

__all__ = [
    "EngineError",
    "TrainProgress",
    "TrainedModel",
    "MODEL_MAGIC",
    "init_weights",
    "forward",
    "backward",
    "learning_rate",
    "sgd_step",
    "train",
    "predict",
    "save_model",
    "load_model",
]

MODEL_MAGIC = b"ESPRMDL1"


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class TrainProgress:
    epoch: int
    iteration: int
    loss: float
    eta_seconds: float


@dataclass
class TrainingMeta:
    solver: SolverConfig
    final_loss: float
    epochs: int
    status: str  # "completed" | "stopped"
    class_names: list[str] = field(default_factory=list)
    input_shape: tuple[int, int, int] = (1, 1, 1)  # (c, h, w)


@dataclass
class TrainedModel:
    spec: NetSpec  # deploy form
    weights: dict[str, tuple[np.ndarray, np.ndarray]]
    meta: TrainingMeta

    @property
    def output_blob(self) -> str:
        if not self.spec.layers:
            return self.spec.inputs[0]
        return self.spec.layers[-1].tops[0]

    @property
    def num_classes(self) -> int:
        return len(self.meta.class_names)


# ---------------------------------------------------------------------------
# dataflow


def _dataflow(spec: NetSpec):
    """Resolve blob names to (name, version) so in-place rewrites keep their
    producers distinct during backprop."""
    version: dict[str, int] = {name: 0 for name in spec.inputs}
    reads, writes = [], []
    for layer in spec.layers:
        if layer.kind == "Data":
            reads.append([])
            outs = []
            for top in layer.tops:
                version[top] = version.get(top, -1) + 1
                outs.append((top, version[top]))
            writes.append(outs)
            continue
        reads.append([(b, version[b]) for b in layer.bottoms])
        outs = []
        for top in layer.tops:
            version[top] = version.get(top, -1) + 1
            outs.append((top, version[top]))
        writes.append(outs)
    return reads, writes


def _softmax_channels(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _as_labels(arr: np.ndarray) -> np.ndarray:
    return arr.reshape(arr.shape[0]).astype(np.int64)


class _Runner:
    """Compiled form of a validated spec for one input shape."""

    def __init__(self, spec: NetSpec, input_shape):
        self.spec = spec
        self.report: ShapeReport = infer_shapes(spec, input_shape)
        self.reads, self.writes = _dataflow(spec)
        names = [lay.name for lay in spec.layers]
        if len(set(names)) != len(names):
            raise EngineError("net has duplicate layer names")

    def forward(self, weights, feeds: dict[str, np.ndarray]):
        values: dict[tuple[str, int], np.ndarray] = {}
        for lay, outs in zip(self.spec.layers, self.writes):
            if lay.kind == "Data":
                for key in outs:
                    values[key] = np.ascontiguousarray(feeds[key[0]], dtype=np.float64)
        for name in self.spec.inputs:
            values[(name, 0)] = np.ascontiguousarray(feeds[name], dtype=np.float64)

        caches: list = []
        for lay, reads, writes in zip(self.spec.layers, self.reads, self.writes):
            if lay.kind == "Data":
                caches.append(None)
                continue
            x = values[reads[0]]
            cache = None
            if lay.kind == "Convolution":
                w, b = weights[lay.name]
                _, _, oh, ow = self.report.blob_shapes[writes[0][0]]
                out = kernels.conv2d_forward(x, w, b, lay.stride, lay.pad, oh, ow)
                cache = x
            elif lay.kind == "Pooling":
                _, _, oh, ow = self.report.blob_shapes[writes[0][0]]
                if lay.pool_method == "MAX":
                    out, arg = kernels.maxpool_forward(x, lay.kernel_size, lay.stride, lay.pad, oh, ow)
                    cache = (arg, x.shape)
                else:
                    out = kernels.avepool_forward(x, lay.kernel_size, lay.stride, lay.pad, oh, ow)
                    cache = x.shape
            elif lay.kind == "InnerProduct":
                w, b = weights[lay.name]
                x2 = x.reshape(x.shape[0], -1)
                out = (x2 @ w.T + b).reshape(x.shape[0], -1, 1, 1)
                cache = x2
            elif lay.kind == "ReLU":
                out = np.maximum(x, 0.0)
                cache = x > 0
            elif lay.kind == "Softmax":
                out = _softmax_channels(x)
                cache = out
            elif lay.kind == "SoftmaxWithLoss":
                labels = _as_labels(values[reads[1]])
                probs = _softmax_channels(x.reshape(x.shape[0], -1, 1, 1))
                picked = probs[np.arange(len(labels)), labels, 0, 0]
                loss = float(-np.mean(np.log(picked)))
                out = np.full((1, 1, 1, 1), loss)
                cache = (probs, labels, x.shape)
            elif lay.kind == "Accuracy":
                labels = _as_labels(values[reads[1]])
                pred = x.reshape(x.shape[0], -1).argmax(axis=1)
                out = np.full((1, 1, 1, 1), float(np.mean(pred == labels)))
            else:  # pragma: no cover
                raise EngineError(f"no executor for layer kind {lay.kind}")
            for key in writes:
                values[key] = out
            caches.append(cache)
        return values, caches

    def blobs(self, values) -> dict[str, np.ndarray]:
        latest: dict[str, np.ndarray] = {}
        for (name, _version), arr in values.items():
            latest[name] = arr  # later versions overwrite: insertion is in program order
        return latest

    def backward(self, weights, values, caches):
        """Backprop from the single SoftmaxWithLoss layer; returns (loss, grads)."""
        loss_indices = [i for i, lay in enumerate(self.spec.layers) if lay.kind == "SoftmaxWithLoss"]
        if len(loss_indices) != 1:
            raise EngineError("training requires exactly one SoftmaxWithLoss layer")
        loss = float(values[self.writes[loss_indices[0]][0]][0, 0, 0, 0])

        dvalues: dict[tuple[str, int], np.ndarray] = {}
        grads: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for idx in range(len(self.spec.layers) - 1, -1, -1):
            lay = self.spec.layers[idx]
            reads, writes = self.reads[idx], self.writes[idx]
            if lay.kind == "Data" or lay.kind == "Accuracy":
                continue
            if lay.kind == "SoftmaxWithLoss":
                if idx != loss_indices[0]:
                    continue
                probs, labels, x_shape = caches[idx]
                dscores = probs.copy()
                dscores[np.arange(len(labels)), labels, 0, 0] -= 1.0
                dscores /= len(labels)
                _accumulate(dvalues, reads[0], dscores.reshape(x_shape))
                continue
            douts = [dvalues.pop(key) for key in writes if key in dvalues]
            if not douts:
                continue  # nothing downstream consumed this layer
            dout = douts[0] if len(douts) == 1 else sum(douts)
            if lay.kind == "Convolution":
                w, _ = weights[lay.name]
                x = caches[idx]
                dx, dw, db = kernels.conv2d_backward(x, w, dout, lay.stride, lay.pad)
                _merge_grad(grads, lay.name, dw, db)
                _accumulate(dvalues, reads[0], dx)
            elif lay.kind == "Pooling":
                if lay.pool_method == "MAX":
                    arg, x_shape = caches[idx]
                    dx = kernels.maxpool_backward(dout, arg, x_shape[2], x_shape[3])
                else:
                    x_shape = caches[idx]
                    dx = kernels.avepool_backward(dout, lay.kernel_size, lay.stride, lay.pad,
                                                  x_shape[2], x_shape[3])
                _accumulate(dvalues, reads[0], dx)
            elif lay.kind == "InnerProduct":
                w, _ = weights[lay.name]
                x2 = caches[idx]
                dout2 = dout.reshape(dout.shape[0], -1)
                _merge_grad(grads, lay.name, dout2.T @ x2, dout2.sum(axis=0))
                _accumulate(dvalues, reads[0], (dout2 @ w).reshape(x2.shape[0], *values[reads[0]].shape[1:]))
            elif lay.kind == "ReLU":
                mask = caches[idx]
                _accumulate(dvalues, reads[0], dout * mask)
            elif lay.kind == "Softmax":
                probs = caches[idx]
                inner = (dout * probs).sum(axis=1, keepdims=True)
                _accumulate(dvalues, reads[0], probs * (dout - inner))
        return loss, grads


def _accumulate(dvalues, key, grad):
    if key in dvalues:
        dvalues[key] = dvalues[key] + grad
    else:
        dvalues[key] = grad


def _merge_grad(grads, name, dw, db):
    if name in grads:
        ow, ob = grads[name]
        grads[name] = (ow + dw, ob + db)
    else:
        grads[name] = (np.ascontiguousarray(dw), np.ascontiguousarray(db))


# ---------------------------------------------------------------------------
# public operations


def init_weights(spec: NetSpec, input_shape, seed: int) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Uniform(-b, b) weights with b = sqrt(6 / (fan_in + fan_out)) for
    Convolution and InnerProduct layers, zero biases.  Same seed, same bits."""
    report = infer_shapes(spec, input_shape)
    rng = np.random.default_rng(seed)
    weights: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for layer in spec.layers:
        if layer.kind == "Convolution":
            c_in = report.blob_shapes[layer.bottoms[0]][1]
            k = layer.kernel_size
            fan_in = c_in * k * k
            fan_out = layer.num_output * k * k
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=(layer.num_output, c_in, k, k))
            weights[layer.name] = (w, np.zeros(layer.num_output))
        elif layer.kind == "InnerProduct":
            _, bc, bh, bw = report.blob_shapes[layer.bottoms[0]]
            fan_in = bc * bh * bw
            fan_out = layer.num_output
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=(layer.num_output, fan_in))
            weights[layer.name] = (w, np.zeros(layer.num_output))
    return weights


def forward(model: TrainedModel, batch: np.ndarray) -> dict[str, np.ndarray]:
    """Run the deploy net on a batch; returns every materialized blob."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 4:
        raise EngineError(f"batch must be 4-d (n,c,h,w), got shape {batch.shape}")
    if tuple(batch.shape[1:]) != tuple(model.meta.input_shape):
        raise EngineError(
            f"batch shape {tuple(batch.shape[1:])} does not match the model input"
            f" {tuple(model.meta.input_shape)}"
        )
    if not model.spec.inputs:
        raise EngineError("deploy net declares no input blob")
    runner = _Runner(model.spec, (batch.shape[0], *model.meta.input_shape))
    values, _ = runner.forward(model.weights, {model.spec.inputs[0]: batch})
    return runner.blobs(values)


def predict(model: TrainedModel, batch: np.ndarray) -> np.ndarray:
    """Class indices via argmax over the net's output blob (ties: lowest)."""
    out = forward(model, batch)[model.output_blob]
    return out.reshape(out.shape[0], -1).argmax(axis=1)


def backward(spec: NetSpec, weights, batch: np.ndarray, labels: np.ndarray,
             input_shape=None) -> tuple[float, dict]:
    """Loss and gradients of the mean softmax cross-entropy over the batch."""
    batch = np.asarray(batch, dtype=np.float64)
    labels = np.asarray(labels)
    if input_shape is None:
        input_shape = batch.shape
    if labels.size == 0:
        raise EngineError("empty batch")
    runner = _Runner(spec, input_shape)
    feeds = _train_feeds(spec, batch, labels)
    num_classes = _net_output_classes(runner)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise EngineError(f"label out of range [0, {num_classes})")
    values, caches = runner.forward(weights, feeds)
    return runner.backward(weights, values, caches)


def _train_feeds(spec: NetSpec, batch, labels) -> dict[str, np.ndarray]:
    feeds: dict[str, np.ndarray] = {}
    data_layers = [lay for lay in spec.layers if lay.kind == "Data"]
    label_col = np.asarray(labels, dtype=np.float64).reshape(-1, 1, 1, 1)
    if data_layers:
        tops = data_layers[0].tops
        feeds[tops[0]] = batch
        if len(tops) > 1:
            feeds[tops[1]] = label_col
    label_consumers = {
        lay.bottoms[1]
        for lay in spec.layers
        if lay.kind in ("SoftmaxWithLoss", "Accuracy") and len(lay.bottoms) > 1
    }
    for name in spec.inputs:
        feeds.setdefault(name, label_col if name in label_consumers else batch)
    return feeds


def _net_output_classes(runner: _Runner) -> int:
    for lay in reversed(runner.spec.layers):
        if lay.kind in ("SoftmaxWithLoss", "Softmax", "Accuracy"):
            return runner.report.blob_shapes[lay.bottoms[0]][1]
        if lay.kind == "InnerProduct":
            return lay.num_output
    if not runner.spec.layers:
        raise EngineError("net has no layers")
    last = runner.spec.layers[-1]
    return runner.report.blob_shapes[last.tops[0]][1]


def learning_rate(config: SolverConfig, iteration: int) -> float:
    if config.lr_policy == "step":
        return config.base_lr * config.gamma ** (iteration // config.step_size)
    return config.base_lr


def sgd_step(weights, grads, velocity, config: SolverConfig, iteration: int):
    """One momentum-SGD update, in place:
    v <- momentum*v - lr*(g + weight_decay*w); w <- w + v."""
    lr = learning_rate(config, iteration)
    for name, (w, b) in weights.items():
        if name not in grads:
            continue
        dw, db = grads[name]
        vw, vb = velocity[name]
        vw *= config.momentum
        vw -= lr * (dw + config.weight_decay * w)
        w += vw
        vb *= config.momentum
        vb -= lr * (db + config.weight_decay * b)
        b += vb
    return weights, velocity


def train(spec: NetSpec, config: SolverConfig, dataset, progress=None,
          cancelled=None, snapshot=None) -> TrainedModel:
    """Mini-batch SGD over a seed-shuffled dataset for config.max_epochs
    epochs.  `progress` receives TrainProgress events (one initial event,
    then one per iteration); `cancelled` is polled at iteration boundaries
    and stops the run with status "stopped"; `snapshot` (if given) is called
    with (epoch, weights) at epoch boundaries per config.snapshot_every."""
    progress = progress or (lambda tp: None)
    cancelled = cancelled or (lambda: False)

    X = dataset.features()
    y = dataset.labels()
    if len(X) == 0:
        raise EngineError("dataset is empty")
    input_shape = (min(config.batch_size, len(X)), *X.shape[1:])
    runner = _Runner(spec, input_shape)
    num_classes = _net_output_classes(runner)
    if num_classes != len(dataset.class_names):
        raise EngineError(
            f"dataset has {len(dataset.class_names)} classes but the net outputs {num_classes}"
        )

    weights = init_weights(spec, input_shape, config.seed)
    velocity = {name: (np.zeros_like(w), np.zeros_like(b)) for name, (w, b) in weights.items()}
    rng = np.random.default_rng(config.seed)

    n = len(X)
    batch = config.batch_size
    iters_per_epoch = -(-n // batch)
    total_iters = config.max_epochs * iters_per_epoch

    def run_batch(idx, update: bool, iteration: int) -> float:
        xb = np.ascontiguousarray(X[idx])
        yb = y[idx]
        sub = _Runner(spec, (len(idx), *X.shape[1:])) if len(idx) != input_shape[0] else runner
        values, caches = sub.forward(weights, _train_feeds(spec, xb, yb))
        loss, grads = sub.backward(weights, values, caches)
        if update:
            sgd_step(weights, grads, velocity, config, iteration)
        return loss

    status = "completed"
    epochs_done = 0
    ewma_dt = None
    iteration = 0

    # initial event: loss before any update
    first_idx = np.arange(min(batch, n))
    final_loss = run_batch(first_idx, update=False, iteration=0)
    progress(TrainProgress(0, 0, final_loss, 0.0))

    stopped = False
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            if cancelled():
                stopped = True
                break
            t0 = time.perf_counter()
            final_loss = run_batch(order[start : start + batch], update=True, iteration=iteration)
            iteration += 1
            dt = time.perf_counter() - t0
            ewma_dt = dt if ewma_dt is None else 0.1 * dt + 0.9 * ewma_dt
            eta = max(0.0, (total_iters - iteration) * ewma_dt)
            progress(TrainProgress(epoch, iteration, final_loss, eta))
        if stopped:
            status = "stopped"
            break
        epochs_done = epoch
        if snapshot is not None and config.snapshot_every > 0 and epoch % config.snapshot_every == 0:
            snapshot(epoch, {k: (w.copy(), b.copy()) for k, (w, b) in weights.items()})
    if not stopped and cancelled():
        status = "stopped"

    meta = TrainingMeta(
        solver=config,
        final_loss=final_loss,
        epochs=epochs_done,
        status=status,
        class_names=list(dataset.class_names),
        input_shape=tuple(X.shape[1:]),
    )
    return TrainedModel(spec=derive_deploy(spec), weights=weights, meta=meta)


# ---------------------------------------------------------------------------
# model container: magic, u32 header length, JSON header, raw LE float64 data


def save_model_bytes(model: TrainedModel) -> bytes:
    arrays = []
    blobs = []
    for name in sorted(model.weights):
        w, b = model.weights[name]
        arrays.append({"layer": name, "shapes": [list(w.shape), list(b.shape)]})
        blobs.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        blobs.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    header = {
        "format_version": 1,
        "net": serialize_net(model.spec),
        "solver": serialize_solver(model.meta.solver),
        "status": model.meta.status,
        "final_loss": model.meta.final_loss,
        "epochs": model.meta.epochs,
        "class_names": model.meta.class_names,
        "input_shape": list(model.meta.input_shape),
        "arrays": arrays,
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    return MODEL_MAGIC + struct.pack("<I", len(head)) + head + b"".join(blobs)


def load_model_bytes(data: bytes) -> TrainedModel:
    if data[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise EngineError("not a model file (bad magic)")
    (hlen,) = struct.unpack_from("<I", data, len(MODEL_MAGIC))
    start = len(MODEL_MAGIC) + 4
    header = json.loads(data[start : start + hlen].decode("utf-8"))
    if header.get("format_version") != 1:
        raise EngineError(f"unsupported model format version {header.get('format_version')}")
    spec, diags = parse_net(header["net"])
    if spec is None:
        raise EngineError("model file contains an invalid net: " + diags[0].message)
    solver, sdiags = parse_solver(header["solver"])
    if solver is None:
        raise EngineError("model file contains an invalid solver: " + sdiags[0].message)
    offset = start + hlen
    weights: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for entry in header["arrays"]:
        wshape, bshape = entry["shapes"]
        wsize = int(np.prod(wshape)) * 8
        bsize = int(np.prod(bshape)) * 8
        w = np.frombuffer(data, dtype="<f8", count=int(np.prod(wshape)), offset=offset).reshape(wshape).copy()
        offset += wsize
        b = np.frombuffer(data, dtype="<f8", count=int(np.prod(bshape)), offset=offset).reshape(bshape).copy()
        offset += bsize
        weights[entry["layer"]] = (w, b)
    meta = TrainingMeta(
        solver=solver,
        final_loss=header["final_loss"],
        epochs=header["epochs"],
        status=header["status"],
        class_names=header["class_names"],
        input_shape=tuple(header["input_shape"]),
    )
    model = TrainedModel(spec=spec, weights=weights, meta=meta)
    _check_weight_shapes(model)
    return model


def _check_weight_shapes(model: TrainedModel):
    """Stored arrays must agree with the net's inferred parameter counts."""
    report = infer_shapes(model.spec, (1, *model.meta.input_shape))
    for layer in model.spec.layers:
        expected = report.param_counts[layer.name]
        if expected == 0:
            continue
        if layer.name not in model.weights:
            raise EngineError(f"model file is missing weights for layer '{layer.name}'")
        w, b = model.weights[layer.name]
        if w.size + b.size != expected:
            raise EngineError(
                f"weights for layer '{layer.name}' hold {w.size + b.size} values"
                f" but the net needs {expected}"
            )


def save_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_model_bytes(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return load_model_bytes(fh.read())
