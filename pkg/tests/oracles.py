"""Independent brute-force oracles used by tests.

These deliberately avoid the closed-form output-size arithmetic in
convkit.shapes: sizes come from enumerating window start positions one by
one, parameter counts from enumerating weight coordinates.
"""

import itertools


def conv_windows_brute(dim, kernel, stride, pad):
    """Number of windows that fit entirely inside the padded extent."""
    extent = dim + 2 * pad
    count = 0
    start = 0
    while start + kernel <= extent:
        count += 1
        start += stride
    return count


def pool_windows_brute(dim, kernel, stride, pad):
    """Number of pooling windows.  A start position q (multiples of stride)
    is valid when the window either fits inside the padded extent or
    overhangs it by less than one stride (the ceil rule); starts at or
    beyond dim + pad are then dropped, since those windows cover padding
    only.  Zero when no valid start exists."""
    extent = dim + 2 * pad
    count = 0
    start = 0
    while start <= extent - kernel + stride - 1:
        count += 1
        start += stride
    while count > 1 and (count - 1) * stride >= dim + pad:
        count -= 1
    return count


def conv_param_count_brute(num_output, c_in, kernel):
    weights = sum(1 for _ in itertools.product(range(num_output), range(c_in),
                                               range(kernel), range(kernel)))
    biases = sum(1 for _ in range(num_output))
    return weights + biases


def ip_param_count_brute(num_output, c_in, h, w):
    weights = sum(1 for _ in itertools.product(range(num_output), range(c_in),
                                               range(h), range(w)))
    return weights + num_output


def conv2d_naive(x, w, b, stride, pad):
    """Direct-definition convolution (zero padding), pure Python loops."""
    import numpy as np

    n, cin, h, wd = x.shape
    f, _, k, _ = w.shape
    oh = conv_windows_brute(h, k, stride, pad)
    ow = conv_windows_brute(wd, k, stride, pad)
    out = np.zeros((n, f, oh, ow))
    for i in range(n):
        for fo in range(f):
            for oy in range(oh):
                for ox in range(ow):
                    acc = b[fo]
                    for c in range(cin):
                        for u in range(k):
                            for v in range(k):
                                iy = oy * stride - pad + u
                                ix = ox * stride - pad + v
                                if 0 <= iy < h and 0 <= ix < wd:
                                    acc += x[i, c, iy, ix] * w[fo, c, u, v]
                    out[i, fo, oy, ox] = acc
    return out
