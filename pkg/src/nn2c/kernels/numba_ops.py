"""Numba-compiled layer kernels.

Same contract as numpy_ops: float32 arithmetic, one multiply-add per step,
bias first, loop order as documented there.  These scalar loops are the
pattern the generated C follows line for line.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def dense(x, w, b):
    n_in, n_out = w.shape
    y = np.empty(n_out, dtype=np.float32)
    for j in range(n_out):
        acc = b[j]
        for i in range(n_in):
            acc += x[i] * w[i, j]
        y[j] = acc
    return y


@njit(cache=True)
def conv1d(x, w, b, stride, pad_left, out_len):
    kernel, channels, filters = w.shape
    length = x.shape[0]
    y = np.empty((out_len, filters), dtype=np.float32)
    for t in range(out_len):
        for f in range(filters):
            acc = b[f]
            for k in range(kernel):
                src = t * stride + k - pad_left
                if src < 0 or src >= length:
                    continue
                for c in range(channels):
                    acc += x[src, c] * w[k, c, f]
            y[t, f] = acc
    return y


@njit(cache=True)
def conv2d(x, w, b, stride_h, stride_w, pad_top, pad_left, out_h, out_w):
    kh, kw, channels, filters = w.shape
    h, wd = x.shape[0], x.shape[1]
    y = np.empty((out_h, out_w, filters), dtype=np.float32)
    for r in range(out_h):
        for s in range(out_w):
            for f in range(filters):
                acc = b[f]
                for i in range(kh):
                    src_r = r * stride_h + i - pad_top
                    if src_r < 0 or src_r >= h:
                        continue
                    for j in range(kw):
                        src_c = s * stride_w + j - pad_left
                        if src_c < 0 or src_c >= wd:
                            continue
                        for c in range(channels):
                            acc += x[src_r, src_c, c] * w[i, j, c, f]
                y[r, s, f] = acc
    return y


@njit(cache=True)
def maxpool1d(x, pool, stride, out_len):
    channels = x.shape[1]
    y = np.empty((out_len, channels), dtype=np.float32)
    for t in range(out_len):
        for c in range(channels):
            m = x[t * stride, c]
            for k in range(1, pool):
                v = x[t * stride + k, c]
                if v > m:
                    m = v
            y[t, c] = m
    return y


@njit(cache=True)
def maxpool2d(x, pool_h, pool_w, stride_h, stride_w, out_h, out_w):
    channels = x.shape[2]
    y = np.empty((out_h, out_w, channels), dtype=np.float32)
    for r in range(out_h):
        for s in range(out_w):
            for c in range(channels):
                m = x[r * stride_h, s * stride_w, c]
                for i in range(pool_h):
                    for j in range(pool_w):
                        v = x[r * stride_h + i, s * stride_w + j, c]
                        if v > m:
                            m = v
                y[r, s, c] = m
    return y
