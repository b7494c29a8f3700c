"""Static shape inference over a validated net.

Given the input blob dimensions, computes the (n, c, h, w) size of every blob
a net produces, a per-layer learnable-parameter count, and the stable color
class each layer kind renders as.  Convolution output sizes round down
(windows must fit entirely inside the padded input); pooling rounds up
(a final partially-overhanging window counts) and then drops windows that
start at or beyond ``dim + pad``, which would cover padding only.
"""

from __future__ import annotations

from dataclasses import dataclass

from convkit.netdef import Diagnostic, LayerSpec, NetSpec, Span

__all__ = [
    "ShapeReport",
    "ShapeError",
    "COLOR_CLASSES",
    "conv_out_dim",
    "pool_out_dim",
    "infer_shapes",
]

COLOR_CLASSES = {
    "Data": 0,
    "Convolution": 1,
    "Pooling": 2,
    "InnerProduct": 3,
    "ReLU": 4,
    "Softmax": 5,
    "SoftmaxWithLoss": 5,
    "Accuracy": 6,
}

Shape = tuple[int, int, int, int]


@dataclass
class ShapeReport:
    blob_shapes: dict[str, Shape]
    layer_colors: dict[str, int]
    param_counts: dict[str, int]

    def to_json(self) -> dict:
        return {
            "blob_shapes": {name: list(self.blob_shapes[name]) for name in sorted(self.blob_shapes)},
            "layer_colors": {name: self.layer_colors[name] for name in sorted(self.layer_colors)},
            "param_counts": {name: self.param_counts[name] for name in sorted(self.param_counts)},
        }


class ShapeError(ValueError):
    """Shape inference failed; carries a Diagnostic pointing at the layer."""

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.diagnostic = Diagnostic("error", message, span or Span(1, 1, 1, 1))


def conv_out_dim(dim: int, kernel: int, stride: int, pad: int) -> int:
    """Convolution output size; may be <= 0 when the kernel cannot fit."""
    return (dim + 2 * pad - kernel) // stride + 1


def pool_out_dim(dim: int, kernel: int, stride: int, pad: int) -> int:
    """Pooling output size (ceil rule), clipped of windows starting at or
    beyond dim + pad; may be <= 0 when the kernel cannot fit."""
    out = -((dim + 2 * pad - kernel) // -stride) + 1
    while out > 1 and (out - 1) * stride >= dim + pad:
        out -= 1
    return out


def _window_dims(layer: LayerSpec, h: int, w: int) -> tuple[int, int]:
    k, s, p = layer.kernel_size, layer.stride, layer.pad
    if layer.kind == "Convolution":
        return conv_out_dim(h, k, s, p), conv_out_dim(w, k, s, p)
    return pool_out_dim(h, k, s, p), pool_out_dim(w, k, s, p)


def infer_shapes(spec: NetSpec, input_shape: Shape) -> ShapeReport:
    """Compute every blob shape for `spec` with declared inputs (and Data
    tops) set to `input_shape`.  Raises ShapeError on a non-positive computed
    dimension, naming the offending layer and dimension."""
    n = int(input_shape[0])
    if any(int(d) < 1 for d in input_shape):
        raise ShapeError(f"input shape {tuple(input_shape)} has a non-positive dimension")

    blobs: dict[str, Shape] = {}
    colors: dict[str, int] = {}
    params: dict[str, int] = {}
    for name in spec.inputs:
        blobs[name] = tuple(int(d) for d in input_shape)

    for layer in spec.layers:
        colors[layer.name] = COLOR_CLASSES[layer.kind]
        params[layer.name] = 0
        if layer.kind == "Data":
            for i, top in enumerate(layer.tops):
                blobs[top] = tuple(input_shape) if i == 0 else (n, 1, 1, 1)
            continue
        bn, bc, bh, bw = blobs[layer.bottoms[0]]
        if layer.kind in ("Convolution", "Pooling"):
            oh, ow = _window_dims(layer, bh, bw)
            for value, axis in ((oh, "height"), (ow, "width")):
                if value < 1:
                    raise ShapeError(
                        f"output {axis} <= 0 at layer '{layer.name}'"
                        f" (input {axis} {bh if axis == 'height' else bw}, kernel"
                        f" {layer.kernel_size}, stride {layer.stride}, pad {layer.pad})",
                        layer.span,
                    )
            if layer.kind == "Convolution":
                out = (bn, layer.num_output, oh, ow)
                k = layer.kernel_size
                params[layer.name] = layer.num_output * bc * k * k + layer.num_output
            else:
                out = (bn, bc, oh, ow)
        elif layer.kind == "InnerProduct":
            out = (bn, layer.num_output, 1, 1)
            params[layer.name] = layer.num_output * (bc * bh * bw) + layer.num_output
        elif layer.kind in ("ReLU", "Softmax"):
            out = (bn, bc, bh, bw)
        else:  # SoftmaxWithLoss, Accuracy
            out = (1, 1, 1, 1)
        for top in layer.tops:
            blobs[top] = out

    return ShapeReport(blobs, colors, params)
