"""Reference forward pass over a network graph.

This is the fidelity oracle: generated C is correct exactly when it matches
these outputs.  All math is 32-bit float with a fixed accumulation order
(see kernels), mirroring what a 32-bit MCU without double-precision
hardware executes.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ShapeError
from .ir import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    INPUT_ID,
    MaxPool1D,
    MaxPool2D,
    NetworkGraph,
    TensorData,
    activation_of,
    conv_axis_length,
    execution_order,
    infer_shapes,
    pool_axis_length,
)


def apply_activation(arr: np.ndarray, act: Activation) -> np.ndarray:
    """Elementwise activation in float32; softmax is max-stabilised."""
    if act is Activation.LINEAR:
        return arr
    if act is Activation.RELU:
        return np.maximum(arr, np.float32(0.0))
    if act is Activation.SIGMOID:
        with np.errstate(over="ignore"):
            return np.float32(1.0) / (np.float32(1.0) + np.exp(-arr))
    if act is Activation.TANH:
        return np.tanh(arr)
    if act is Activation.SOFTMAX:
        shifted = np.exp(arr - arr.max())
        return shifted / shifted.sum(dtype=np.float32)
    raise ShapeError(f"unknown activation {act!r}")


def apply_layer(kind, x: np.ndarray, kernel, bias,
                in_shape: tuple[int, ...]) -> np.ndarray:
    """One layer's output (activation included) on a float32 array."""
    ops = kernels.active_backend()
    if isinstance(kind, Dense):
        y = ops.dense(x, kernel, bias)
    elif isinstance(kind, Conv1D):
        out_len, pad_left = conv_axis_length(
            in_shape[0], kind.kernel_size, kind.stride, kind.padding)
        y = ops.conv1d(x, kernel, bias, kind.stride, pad_left, out_len)
    elif isinstance(kind, Conv2D):
        out_h, pad_top = conv_axis_length(
            in_shape[0], kind.kernel_h, kind.stride_h, kind.padding)
        out_w, pad_left = conv_axis_length(
            in_shape[1], kind.kernel_w, kind.stride_w, kind.padding)
        y = ops.conv2d(x, kernel, bias, kind.stride_h, kind.stride_w,
                       pad_top, pad_left, out_h, out_w)
    elif isinstance(kind, MaxPool1D):
        out_len = pool_axis_length(in_shape[0], kind.pool_size, kind.stride)
        y = ops.maxpool1d(x, kind.pool_size, kind.stride, out_len)
    elif isinstance(kind, MaxPool2D):
        out_h = pool_axis_length(in_shape[0], kind.pool_h, kind.stride_h)
        out_w = pool_axis_length(in_shape[1], kind.pool_w, kind.stride_w)
        y = ops.maxpool2d(x, kind.pool_h, kind.pool_w,
                          kind.stride_h, kind.stride_w, out_h, out_w)
    elif isinstance(kind, Flatten):
        y = x.reshape(-1).copy()
    else:
        raise ShapeError(f"no kernel for layer kind {type(kind).__name__}")
    return apply_activation(y, activation_of(kind))


def _run(graph: NetworkGraph, x: TensorData) -> dict[str, np.ndarray]:
    if x.shape != graph.input_shape:
        raise ShapeError(
            f"input shape {x.shape} does not match network input "
            f"{graph.input_shape}"
        )
    shapes = infer_shapes(graph)
    outputs: dict[str, np.ndarray] = {}
    current = x.as_array()
    for lid in execution_order(graph):
        spec = graph.layers[lid]
        pred = spec.inputs[0]
        if pred == INPUT_ID:
            src, in_shape = current, graph.input_shape
        else:
            src, in_shape = outputs[pred], shapes[pred]
        w = graph.weights.get(lid)
        kernel = w.kernel.as_array() if w else None
        bias = w.bias.as_array() if w else None
        outputs[lid] = apply_layer(spec.kind, src, kernel, bias, in_shape)
    return outputs


def forward(graph: NetworkGraph, x: TensorData) -> TensorData:
    """Single forward pass; returns the output layer's tensor."""
    outputs = _run(graph, x)
    return TensorData.from_array(outputs[graph.output_id])


def forward_traced(graph: NetworkGraph, x: TensorData) -> dict[str, TensorData]:
    """Forward pass that keeps every intermediate layer output."""
    outputs = _run(graph, x)
    return {lid: TensorData.from_array(arr) for lid, arr in outputs.items()}
