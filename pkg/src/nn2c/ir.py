"""In-memory representation of trained feed-forward networks.

A model is a directed acyclic graph of typed layer nodes with weights
attached.  All tensors are float32, stored row-major with channels last.
Graphs are treated as immutable once validated; every operation in this
module is a pure function over the graph.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import CycleError, DanglingInputError, GraphError, ShapeError

#: Sentinel predecessor id referring to the network input.
INPUT_ID = "__input__"


class Activation(str, Enum):
    LINEAR = "linear"
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class TensorData:
    """Shape plus flat row-major float32 buffer."""

    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        shape = tuple(int(d) for d in self.shape)
        data = np.ascontiguousarray(self.data, dtype=np.float32).ravel()
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)
        if not shape:
            raise ShapeError("tensor shape must be non-empty")
        if any(d < 1 for d in shape):
            raise ShapeError(f"tensor dimensions must be >= 1, got {shape}")
        if math.prod(shape) != data.size:
            raise ShapeError(
                f"shape {shape} implies {math.prod(shape)} values, "
                f"buffer holds {data.size}"
            )

    @classmethod
    def from_array(cls, arr) -> "TensorData":
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return cls(tuple(arr.shape), arr.ravel())

    @property
    def size(self) -> int:
        return int(self.data.size)

    def as_array(self) -> np.ndarray:
        return self.data.reshape(self.shape)


# --- layer kinds -----------------------------------------------------------

@dataclass(frozen=True)
class Dense:
    units: int
    activation: Activation = Activation.LINEAR


@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel_size: int
    stride: int = 1
    padding: str = "valid"
    activation: Activation = Activation.LINEAR


@dataclass(frozen=True)
class Conv2D:
    filters: int
    kernel_h: int
    kernel_w: int
    stride_h: int = 1
    stride_w: int = 1
    padding: str = "valid"
    activation: Activation = Activation.LINEAR


@dataclass(frozen=True)
class MaxPool1D:
    pool_size: int
    stride: int


@dataclass(frozen=True)
class MaxPool2D:
    pool_h: int
    pool_w: int
    stride_h: int
    stride_w: int


@dataclass(frozen=True)
class Flatten:
    pass


LayerKind = Union[Dense, Conv1D, Conv2D, MaxPool1D, MaxPool2D, Flatten]

#: Layer kinds that carry a kernel and bias.
WEIGHTED_KINDS = (Dense, Conv1D, Conv2D)

KIND_NAMES = {
    Dense: "dense",
    Conv1D: "conv1d",
    Conv2D: "conv2d",
    MaxPool1D: "maxpool1d",
    MaxPool2D: "maxpool2d",
    Flatten: "flatten",
}


def kind_name(kind: LayerKind) -> str:
    return KIND_NAMES[type(kind)]


def is_weighted(kind: LayerKind) -> bool:
    return isinstance(kind, WEIGHTED_KINDS)


def activation_of(kind: LayerKind) -> Activation:
    return getattr(kind, "activation", Activation.LINEAR)


@dataclass(frozen=True)
class LayerSpec:
    id: str
    kind: LayerKind
    inputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class LayerWeights:
    kernel: TensorData
    bias: TensorData


@dataclass
class NetworkGraph:
    """Validated DAG of layers; the hub every other module works from."""

    name: str
    input_shape: tuple[int, ...]
    layers: dict[str, LayerSpec]
    weights: dict[str, LayerWeights]
    output_id: str

    def __post_init__(self):
        self.input_shape = tuple(int(d) for d in self.input_shape)

    def weights_for(self, layer_id: str) -> Optional[LayerWeights]:
        return self.weights.get(layer_id)


# --- shape arithmetic ------------------------------------------------------

def conv_axis_length(length: int, kernel: int, stride: int, padding: str):
    """Output length and left zero-pad for one convolution axis."""
    if padding == "valid":
        out = (length - kernel) // stride + 1
        pad_left = 0
    elif padding == "same":
        out = -(-length // stride)
        total = max((out - 1) * stride + kernel - length, 0)
        pad_left = total // 2
    else:
        raise ShapeError(f"unknown padding mode {padding!r}")
    if out < 1:
        raise ShapeError(
            f"kernel {kernel} with stride {stride} does not fit length {length}"
        )
    return out, pad_left


def pool_axis_length(length: int, pool: int, stride: int) -> int:
    out = (length - pool) // stride + 1
    if out < 1:
        raise ShapeError(
            f"pool {pool} with stride {stride} does not fit length {length}"
        )
    return out


def layer_output_shape(kind: LayerKind, in_shape: tuple[int, ...],
                       layer_id: str) -> tuple[int, ...]:
    """Shape of one layer's output given its input shape, channels-last."""
    if isinstance(kind, Dense):
        if len(in_shape) != 1:
            raise ShapeError(
                f"dense layer {layer_id!r} needs a rank-1 input, got {in_shape}"
            )
        out = (kind.units,)
    elif isinstance(kind, Conv1D):
        if len(in_shape) != 2:
            raise ShapeError(
                f"conv1d layer {layer_id!r} needs input [length, channels], "
                f"got {in_shape}"
            )
        length, _ = in_shape
        out_len, _ = conv_axis_length(length, kind.kernel_size, kind.stride,
                                      kind.padding)
        out = (out_len, kind.filters)
    elif isinstance(kind, Conv2D):
        if len(in_shape) != 3:
            raise ShapeError(
                f"conv2d layer {layer_id!r} needs input [h, w, channels], "
                f"got {in_shape}"
            )
        h, w, _ = in_shape
        out_h, _ = conv_axis_length(h, kind.kernel_h, kind.stride_h, kind.padding)
        out_w, _ = conv_axis_length(w, kind.kernel_w, kind.stride_w, kind.padding)
        out = (out_h, out_w, kind.filters)
    elif isinstance(kind, MaxPool1D):
        if len(in_shape) != 2:
            raise ShapeError(
                f"maxpool1d layer {layer_id!r} needs input [length, channels], "
                f"got {in_shape}"
            )
        out = (pool_axis_length(in_shape[0], kind.pool_size, kind.stride),
               in_shape[1])
    elif isinstance(kind, MaxPool2D):
        if len(in_shape) != 3:
            raise ShapeError(
                f"maxpool2d layer {layer_id!r} needs input [h, w, channels], "
                f"got {in_shape}"
            )
        out = (pool_axis_length(in_shape[0], kind.pool_h, kind.stride_h),
               pool_axis_length(in_shape[1], kind.pool_w, kind.stride_w),
               in_shape[2])
    elif isinstance(kind, Flatten):
        out = (math.prod(in_shape),)
    else:
        raise GraphError(f"unknown layer kind {type(kind).__name__}")

    if activation_of(kind) is Activation.SOFTMAX and len(out) != 1:
        raise ShapeError(
            f"softmax on layer {layer_id!r} requires a rank-1 output, got {out}"
        )
    return out


def expected_weight_shapes(kind: LayerKind, in_shape: tuple[int, ...]):
    """(kernel shape, bias shape) a weighted layer must carry."""
    if isinstance(kind, Dense):
        return (in_shape[0], kind.units), (kind.units,)
    if isinstance(kind, Conv1D):
        return (kind.kernel_size, in_shape[1], kind.filters), (kind.filters,)
    if isinstance(kind, Conv2D):
        return (kind.kernel_h, kind.kernel_w, in_shape[2], kind.filters), \
               (kind.filters,)
    raise GraphError(f"{kind_name(kind)} layers carry no weights")


# --- graph operations ------------------------------------------------------

def execution_order(graph: NetworkGraph) -> list[str]:
    """Topological order over the layer DAG, ties broken by id.

    Every layer appears after all of its declared inputs, which is what a
    breadth-first walk from the input gives on plain layer chains; on general
    DAGs only the topological guarantee is safe.
    """
    indegree: dict[str, int] = {}
    successors: dict[str, list[str]] = {lid: [] for lid in graph.layers}
    for spec in graph.layers.values():
        count = 0
        for pred in spec.inputs:
            if pred == INPUT_ID:
                continue
            if pred not in graph.layers:
                raise DanglingInputError(
                    f"layer {spec.id!r} lists unknown input {pred!r}"
                )
            successors[pred].append(spec.id)
            count += 1
        indegree[spec.id] = count

    ready = [lid for lid, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        lid = heapq.heappop(ready)
        order.append(lid)
        for succ in sorted(successors[lid]):
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, succ)
    if len(order) != len(graph.layers):
        stuck = sorted(set(graph.layers) - set(order))
        raise CycleError(f"layer graph has a cycle through {stuck}")
    return order


def infer_shapes(graph: NetworkGraph) -> dict[str, tuple[int, ...]]:
    """Output shape of every layer, computed in dependency order."""
    shapes: dict[str, tuple[int, ...]] = {}
    for lid in execution_order(graph):
        spec = graph.layers[lid]
        pred = spec.inputs[0]
        in_shape = graph.input_shape if pred == INPUT_ID else shapes[pred]
        shapes[lid] = layer_output_shape(spec.kind, in_shape, lid)
    return shapes


def param_count(graph: NetworkGraph) -> int:
    """Total number of scalar parameters baked into the network."""
    return sum(w.kernel.size + w.bias.size for w in graph.weights.values())


def validate_graph(graph: NetworkGraph) -> dict[str, tuple[int, ...]]:
    """Check every structural and shape invariant; returns the shape map."""
    if not graph.layers:
        raise GraphError("graph has no layers")
    if any(d < 1 for d in graph.input_shape) or not graph.input_shape:
        raise ShapeError(f"bad input shape {graph.input_shape}")

    input_consumers = []
    for lid, spec in graph.layers.items():
        if not lid or lid == INPUT_ID:
            raise GraphError(f"illegal layer id {lid!r}")
        if lid != spec.id:
            raise GraphError(f"layer keyed {lid!r} carries id {spec.id!r}")
        if len(spec.inputs) != 1:
            raise GraphError(
                f"layer {lid!r} declares {len(spec.inputs)} inputs; "
                "merge layers are not supported"
            )
        if INPUT_ID in spec.inputs:
            input_consumers.append(lid)
    if len(input_consumers) != 1:
        raise GraphError(
            f"exactly one layer must consume {INPUT_ID}, "
            f"found {sorted(input_consumers)}"
        )

    if graph.output_id not in graph.layers:
        raise GraphError(f"output layer {graph.output_id!r} does not exist")
    for spec in graph.layers.values():
        if graph.output_id in spec.inputs:
            raise GraphError(
                f"output layer {graph.output_id!r} feeds {spec.id!r}"
            )

    shapes = infer_shapes(graph)  # also raises on cycles / dangling inputs

    for lid, spec in graph.layers.items():
        weights = graph.weights.get(lid)
        if not is_weighted(spec.kind):
            if weights is not None:
                raise GraphError(f"{kind_name(spec.kind)} layer {lid!r} "
                                 "must not carry weights")
            continue
        if weights is None:
            raise GraphError(f"layer {lid!r} is missing its weights")
        pred = spec.inputs[0]
        in_shape = graph.input_shape if pred == INPUT_ID else shapes[pred]
        want_kernel, want_bias = expected_weight_shapes(spec.kind, in_shape)
        if weights.kernel.shape != want_kernel:
            raise ShapeError(
                f"layer {lid!r} kernel shape {weights.kernel.shape}, "
                f"expected {want_kernel}"
            )
        if weights.bias.shape != want_bias:
            raise ShapeError(
                f"layer {lid!r} bias shape {weights.bias.shape}, "
                f"expected {want_bias}"
            )
    return shapes
