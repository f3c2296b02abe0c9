"""Pure-numpy layer kernels.

Accumulation order is part of the contract: per output element, terms are
added one float32 multiply-add at a time in the documented loop order
(dense: input index; conv1d: tap, then channel; conv2d: row tap, column tap,
then channel), starting from the bias.  The loops below run over the small
kernel axes and vectorise over output positions, which performs the exact
same per-element float32 operation sequence as the scalar loops in the
numba backend and in the generated C.
"""

import numpy as np


def dense(x, w, b):
    y = b.copy()
    for i in range(w.shape[0]):
        y = y + x[i] * w[i, :]
    return y


def conv1d(x, w, b, stride, pad_left, out_len):
    kernel, channels, filters = w.shape
    length = x.shape[0]
    span = (out_len - 1) * stride + kernel
    if pad_left or span > length:
        padded = np.zeros((span, channels), dtype=np.float32)
        padded[pad_left:pad_left + length] = x
        x = padded
    y = np.empty((out_len, filters), dtype=np.float32)
    y[:] = b
    for k in range(kernel):
        xk = x[k:k + out_len * stride:stride, :]
        for c in range(channels):
            y = y + xk[:, c:c + 1] * w[k, c, :]
    return y


def conv2d(x, w, b, stride_h, stride_w, pad_top, pad_left, out_h, out_w):
    kh, kw, channels, filters = w.shape
    h, wd = x.shape[0], x.shape[1]
    span_h = (out_h - 1) * stride_h + kh
    span_w = (out_w - 1) * stride_w + kw
    if pad_top or pad_left or span_h > h or span_w > wd:
        padded = np.zeros((span_h, span_w, channels), dtype=np.float32)
        padded[pad_top:pad_top + h, pad_left:pad_left + wd] = x
        x = padded
    y = np.empty((out_h, out_w, filters), dtype=np.float32)
    y[:] = b
    for i in range(kh):
        xi = x[i:i + out_h * stride_h:stride_h]
        for j in range(kw):
            xij = xi[:, j:j + out_w * stride_w:stride_w, :]
            for c in range(channels):
                y = y + xij[:, :, c:c + 1] * w[i, j, c, :]
    return y


def maxpool1d(x, pool, stride, out_len):
    y = x[0:out_len * stride:stride, :].copy()
    for k in range(1, pool):
        np.maximum(y, x[k:k + out_len * stride:stride, :], out=y)
    return y


def maxpool2d(x, pool_h, pool_w, stride_h, stride_w, out_h, out_w):
    y = None
    for i in range(pool_h):
        xi = x[i:i + out_h * stride_h:stride_h]
        for j in range(pool_w):
            window = xi[:, j:j + out_w * stride_w:stride_w, :]
            if y is None:
                y = window.copy()
            else:
                np.maximum(y, window, out=y)
    return y
