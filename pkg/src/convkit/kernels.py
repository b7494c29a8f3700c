"""Hot numeric kernels: convolution and pooling, forward and backward.

Two interchangeable implementations of each kernel:

- plain nested loops compiled with numba ``@njit`` (the default whenever
  numba imports), serial and without fastmath so results are reproducible
  bit-for-bit across runs;
- vectorized numpy fallbacks built on ``sliding_window_view``.

Set ``CONVKIT_NUMBA=0`` to force the numpy path.  Both variants stay
importable (``NUMPY_IMPLS`` / ``NUMBA_IMPLS``) so tests can cross-check them
and ``benchmarks/bench_kernels.py`` can time them against each other.

All kernels take float64 C-contiguous arrays in (n, c, h, w) layout and the
precomputed output height/width (the rounding rules live in convkit.shapes).
Pooling windows may overhang the padded extent (ceil rule); MAX ignores
padding and outputs 0 with no gradient for the degenerate all-padding window,
AVE divides by the window's overlap with the padded extent.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "USE_NUMBA",
    "NUMBA_AVAILABLE",
    "NUMPY_IMPLS",
    "NUMBA_IMPLS",
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "avepool_forward",
    "avepool_backward",
    "warmup",
]


def _flag_enabled() -> bool:
    return os.environ.get("CONVKIT_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _flag_enabled()


# ---------------------------------------------------------------------------
# loop kernels (numba target)


def _conv2d_forward_loops(x, w, b, stride, pad, oh, ow):
    n, cin, h, wd = x.shape
    f = w.shape[0]
    k = w.shape[2]
    out = np.empty((n, f, oh, ow))
    for i in range(n):
        for fo in range(f):
            for oy in range(oh):
                iy0 = oy * stride - pad
                u0 = max(0, -iy0)
                u1 = min(k, h - iy0)
                for ox in range(ow):
                    ix0 = ox * stride - pad
                    v0 = max(0, -ix0)
                    v1 = min(k, wd - ix0)
                    acc = b[fo]
                    for c in range(cin):
                        for u in range(u0, u1):
                            iy = iy0 + u
                            for v in range(v0, v1):
                                acc += x[i, c, iy, ix0 + v] * w[fo, c, u, v]
                    out[i, fo, oy, ox] = acc
    return out


def _conv2d_backward_loops(x, w, dout, stride, pad):
    n, cin, h, wd = x.shape
    f = w.shape[0]
    k = w.shape[2]
    oh = dout.shape[2]
    ow = dout.shape[3]
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros(f)
    for i in range(n):
        for fo in range(f):
            for oy in range(oh):
                iy0 = oy * stride - pad
                u0 = max(0, -iy0)
                u1 = min(k, h - iy0)
                for ox in range(ow):
                    ix0 = ox * stride - pad
                    v0 = max(0, -ix0)
                    v1 = min(k, wd - ix0)
                    g = dout[i, fo, oy, ox]
                    db[fo] += g
                    for c in range(cin):
                        for u in range(u0, u1):
                            iy = iy0 + u
                            for v in range(v0, v1):
                                dw[fo, c, u, v] += g * x[i, c, iy, ix0 + v]
                                dx[i, c, iy, ix0 + v] += g * w[fo, c, u, v]
    return dx, dw, db


def _maxpool_forward_loops(x, kernel, stride, pad, oh, ow):
    n, c, h, wd = x.shape
    out = np.zeros((n, c, oh, ow))
    arg = np.full((n, c, oh, ow), -1, np.int64)
    for i in range(n):
        for ci in range(c):
            for oy in range(oh):
                iy0 = oy * stride - pad
                for ox in range(ow):
                    ix0 = ox * stride - pad
                    best = -np.inf
                    where = np.int64(-1)
                    for u in range(kernel):
                        iy = iy0 + u
                        if iy < 0 or iy >= h:
                            continue
                        for v in range(kernel):
                            ix = ix0 + v
                            if 0 <= ix < wd:
                                val = x[i, ci, iy, ix]
                                if val > best:
                                    best = val
                                    where = np.int64(iy * wd + ix)
                    if where >= 0:
                        out[i, ci, oy, ox] = best
                        arg[i, ci, oy, ox] = where
    return out, arg


def _maxpool_backward_loops(dout, arg, h, wd):
    n, c, oh, ow = dout.shape
    dx = np.zeros((n, c, h, wd))
    for i in range(n):
        for ci in range(c):
            for oy in range(oh):
                for ox in range(ow):
                    where = arg[i, ci, oy, ox]
                    if where >= 0:
                        dx[i, ci, where // wd, where % wd] += dout[i, ci, oy, ox]
    return dx


def _avepool_forward_loops(x, kernel, stride, pad, oh, ow):
    n, c, h, wd = x.shape
    out = np.zeros((n, c, oh, ow))
    for i in range(n):
        for ci in range(c):
            for oy in range(oh):
                hstart = oy * stride - pad
                hend = min(hstart + kernel, h + pad)
                for ox in range(ow):
                    wstart = ox * stride - pad
                    wend = min(wstart + kernel, wd + pad)
                    size = (hend - hstart) * (wend - wstart)
                    acc = 0.0
                    for iy in range(max(hstart, 0), min(hend, h)):
                        for ix in range(max(wstart, 0), min(wend, wd)):
                            acc += x[i, ci, iy, ix]
                    out[i, ci, oy, ox] = acc / size
    return out


def _avepool_backward_loops(dout, kernel, stride, pad, h, wd):
    n, c, oh, ow = dout.shape
    dx = np.zeros((n, c, h, wd))
    for i in range(n):
        for ci in range(c):
            for oy in range(oh):
                hstart = oy * stride - pad
                hend = min(hstart + kernel, h + pad)
                for ox in range(ow):
                    wstart = ox * stride - pad
                    wend = min(wstart + kernel, wd + pad)
                    size = (hend - hstart) * (wend - wstart)
                    g = dout[i, ci, oy, ox] / size
                    for iy in range(max(hstart, 0), min(hend, h)):
                        for ix in range(max(wstart, 0), min(wend, wd)):
                            dx[i, ci, iy, ix] += g
    return dx


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks


def _conv_windows(x, k, stride, pad, oh, ow, fill=0.0):
    n, c, h, wd = x.shape
    eh = max(h + 2 * pad, (oh - 1) * stride + k)
    ew = max(wd + 2 * pad, (ow - 1) * stride + k)
    xp = np.full((n, c, eh, ew), fill)
    xp[:, :, pad : pad + h, pad : pad + wd] = x
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    return xp, win[:, :, ::stride, ::stride][:, :, :oh, :ow]


def _conv2d_forward_numpy(x, w, b, stride, pad, oh, ow):
    k = w.shape[2]
    _, win = _conv_windows(x, k, stride, pad, oh, ow)
    out = np.einsum("ncyxuv,fcuv->nfyx", win, w, optimize=True)
    out += b[None, :, None, None]
    return np.ascontiguousarray(out)


def _conv2d_backward_numpy(x, w, dout, stride, pad):
    n, cin, h, wd = x.shape
    f = w.shape[0]
    k = w.shape[2]
    oh, ow = dout.shape[2], dout.shape[3]
    xp, win = _conv_windows(x, k, stride, pad, oh, ow)
    dw = np.einsum("nfyx,ncyxuv->fcuv", dout, win, optimize=True)
    db = dout.sum(axis=(0, 2, 3))
    dxp = np.zeros_like(xp)
    for u in range(k):
        for v in range(k):
            contrib = np.einsum("nfyx,fc->ncyx", dout, w[:, :, u, v], optimize=True)
            dxp[:, :, u : u + oh * stride : stride, v : v + ow * stride : stride] += contrib
    dx = dxp[:, :, pad : pad + h, pad : pad + wd]
    return np.ascontiguousarray(dx), np.ascontiguousarray(dw), db


def _maxpool_forward_numpy(x, kernel, stride, pad, oh, ow):
    n, c, h, wd = x.shape
    _, win = _conv_windows(x, kernel, stride, pad, oh, ow, fill=-np.inf)
    flat = win.reshape(n, c, oh, ow, kernel * kernel)
    aidx = flat.argmax(axis=-1)
    vals = np.take_along_axis(flat, aidx[..., None], axis=-1)[..., 0]
    valid = np.isfinite(vals)
    out = np.where(valid, vals, 0.0)
    u, v = aidx // kernel, aidx % kernel
    iy = np.arange(oh)[None, None, :, None] * stride - pad + u
    ix = np.arange(ow)[None, None, None, :] * stride - pad + v
    arg = np.where(valid, iy * wd + ix, -1).astype(np.int64)
    return np.ascontiguousarray(out), arg


def _maxpool_backward_numpy(dout, arg, h, wd):
    n, c, oh, ow = dout.shape
    dx = np.zeros((n, c, h * wd))
    ni, ci, oy, ox = np.nonzero(arg >= 0)
    np.add.at(dx, (ni, ci, arg[ni, ci, oy, ox]), dout[ni, ci, oy, ox])
    return dx.reshape(n, c, h, wd)


def _avepool_sizes(kernel, stride, pad, h, wd, oh, ow):
    hstart = np.arange(oh) * stride - pad
    wstart = np.arange(ow) * stride - pad
    hsize = np.minimum(hstart + kernel, h + pad) - hstart
    wsize = np.minimum(wstart + kernel, wd + pad) - wstart
    return hsize[:, None] * wsize[None, :]


def _avepool_forward_numpy(x, kernel, stride, pad, oh, ow):
    n, c, h, wd = x.shape
    _, win = _conv_windows(x, kernel, stride, pad, oh, ow, fill=0.0)
    sums = win.sum(axis=(-2, -1))
    sizes = _avepool_sizes(kernel, stride, pad, h, wd, oh, ow)
    return np.ascontiguousarray(sums / sizes[None, None])


def _avepool_backward_numpy(dout, kernel, stride, pad, h, wd):
    n, c, oh, ow = dout.shape
    eh = max(h + 2 * pad, (oh - 1) * stride + kernel)
    ew = max(wd + 2 * pad, (ow - 1) * stride + kernel)
    sizes = _avepool_sizes(kernel, stride, pad, h, wd, oh, ow)
    g = dout / sizes[None, None]
    dxp = np.zeros((n, c, eh, ew))
    for u in range(kernel):
        for v in range(kernel):
            dxp[:, :, u : u + oh * stride : stride, v : v + ow * stride : stride] += g
    return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wd])


NUMPY_IMPLS = {
    "conv2d_forward": _conv2d_forward_numpy,
    "conv2d_backward": _conv2d_backward_numpy,
    "maxpool_forward": _maxpool_forward_numpy,
    "maxpool_backward": _maxpool_backward_numpy,
    "avepool_forward": _avepool_forward_numpy,
    "avepool_backward": _avepool_backward_numpy,
}

if NUMBA_AVAILABLE:
    _jit = njit(cache=True, fastmath=False)
    NUMBA_IMPLS = {
        "conv2d_forward": _jit(_conv2d_forward_loops),
        "conv2d_backward": _jit(_conv2d_backward_loops),
        "maxpool_forward": _jit(_maxpool_forward_loops),
        "maxpool_backward": _jit(_maxpool_backward_loops),
        "avepool_forward": _jit(_avepool_forward_loops),
        "avepool_backward": _jit(_avepool_backward_loops),
    }
else:
    NUMBA_IMPLS = {}

_ACTIVE = NUMBA_IMPLS if USE_NUMBA else NUMPY_IMPLS

conv2d_forward = _ACTIVE["conv2d_forward"]
conv2d_backward = _ACTIVE["conv2d_backward"]
maxpool_forward = _ACTIVE["maxpool_forward"]
maxpool_backward = _ACTIVE["maxpool_backward"]
avepool_forward = _ACTIVE["avepool_forward"]
avepool_backward = _ACTIVE["avepool_backward"]


def warmup():
    """Trigger JIT compilation of the active kernels on tiny inputs so later
    calls (and timed test sections) pay no compile cost.  No-op on numpy."""
    if not USE_NUMBA:
        return
    x = np.ones((1, 1, 4, 4))
    w = np.ones((1, 1, 2, 2))
    b = np.zeros(1)
    out = conv2d_forward(x, w, b, 1, 0, 3, 3)
    conv2d_backward(x, w, out, 1, 0)
    pooled, arg = maxpool_forward(x, 2, 2, 0, 2, 2)
    maxpool_backward(pooled, arg, 4, 4)
    avg = avepool_forward(x, 2, 2, 0, 2, 2)
    avepool_backward(avg, 2, 2, 0, 4, 4)
