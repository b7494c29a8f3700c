"""Benchmark the numba-jitted loop kernels against the vectorized numpy
fallbacks.

    python3 benchmarks/bench_kernels.py [--batch 16] [--size 32] [--reps 20]

Shapes mimic a small training step: conv 3x3 with padding, 2x2 max pool,
forward and backward.  The first jitted call compiles (cached on disk), so a
warmup round runs before timing.
"""

import argparse
import time

import numpy as np

from convkit import kernels
from convkit.shapes import conv_out_dim, pool_out_dim


def time_fn(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--channels", type=int, default=8)
    parser.add_argument("--filters", type=int, default=16)
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n, c, f, hw = args.batch, args.channels, args.filters, args.size
    x = rng.standard_normal((n, c, hw, hw))
    w = rng.standard_normal((f, c, 3, 3))
    b = rng.standard_normal(f)
    oh = conv_out_dim(hw, 3, 1, 1)
    dout = rng.standard_normal((n, f, oh, oh))
    ph = pool_out_dim(hw, 2, 2, 0)

    cases = {
        "conv2d_forward": lambda impl: impl(x, w, b, 1, 1, oh, oh),
        "conv2d_backward": lambda impl: impl(x, w, dout, 1, 1),
        "maxpool_forward": lambda impl: impl(x, 2, 2, 0, ph, ph),
        "avepool_forward": lambda impl: impl(x, 2, 2, 0, ph, ph),
    }

    paths = {"numpy": kernels.NUMPY_IMPLS}
    if kernels.NUMBA_AVAILABLE:
        paths["numba"] = kernels.NUMBA_IMPLS
        for name, call in cases.items():  # compile before timing
            call(kernels.NUMBA_IMPLS[name])
    else:
        print("numba not importable; timing the numpy path only")

    print(f"batch={n} channels={c} filters={f} size={hw}x{hw}  (best of {args.reps})")
    header = f"{'kernel':<18}" + "".join(f"{p:>12}" for p in paths)
    if len(paths) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, call in cases.items():
        times = {p: time_fn(lambda: call(impls[name]), args.reps) for p, impls in paths.items()}
        row = f"{name:<18}" + "".join(f"{times[p] * 1e3:>10.2f}ms" for p in paths)
        if len(times) == 2:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
