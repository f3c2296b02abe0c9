"""Builders for the model corpus shipped under models/.

Each builder reconstructs one of the benchmark architectures with seeded
Glorot-uniform weights, so the corpus regenerates byte-identically.
``build_chain`` is the generic helper: it wires a linear stack of layers
from the network input to the output and attaches random weights.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .ir import (
    Conv1D,
    Dense,
    Flatten,
    INPUT_ID,
    LayerKind,
    LayerSpec,
    LayerWeights,
    MaxPool1D,
    NetworkGraph,
    TensorData,
    Activation,
    expected_weight_shapes,
    is_weighted,
    layer_output_shape,
    validate_graph,
)
from .parser import serialize_model


def _fan(kind: LayerKind, kernel_shape: tuple[int, ...]) -> tuple[int, int]:
    if isinstance(kind, Dense):
        return kernel_shape[0], kernel_shape[1]
    # conv kernels: receptive field x channels in, receptive field x filters
    receptive = math.prod(kernel_shape[:-2])
    return receptive * kernel_shape[-2], receptive * kernel_shape[-1]


def build_chain(name: str, input_shape, layers: list[tuple[str, LayerKind]],
                seed: int = 0) -> NetworkGraph:
    """Linear stack input -> layers[0] -> ... -> layers[-1] with random weights."""
    rng = np.random.default_rng(seed)
    specs: dict[str, LayerSpec] = {}
    weights: dict[str, LayerWeights] = {}
    in_shape = tuple(input_shape)
    prev = INPUT_ID
    for lid, kind in layers:
        specs[lid] = LayerSpec(id=lid, kind=kind, inputs=(prev,))
        if is_weighted(kind):
            kernel_shape, bias_shape = expected_weight_shapes(kind, in_shape)
            fan_in, fan_out = _fan(kind, kernel_shape)
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            kernel = rng.uniform(-limit, limit, kernel_shape)
            bias = rng.uniform(-0.1, 0.1, bias_shape)
            weights[lid] = LayerWeights(
                kernel=TensorData.from_array(kernel),
                bias=TensorData.from_array(bias),
            )
        in_shape = layer_output_shape(kind, in_shape, lid)
        prev = lid
    graph = NetworkGraph(name=name, input_shape=tuple(input_shape),
                         layers=specs, weights=weights, output_id=prev)
    validate_graph(graph)
    return graph


def composite_cnn(seed: int = 1001) -> NetworkGraph:
    """CNN used for impact-source regression: conv, pool, three dense."""
    return build_chain("composite_cnn", (100, 1), [
        ("conv1", Conv1D(filters=3, kernel_size=5,
                         activation=Activation.RELU)),
        ("pool1", MaxPool1D(pool_size=5, stride=5)),
        ("flat1", Flatten()),
        ("dense1", Dense(units=32, activation=Activation.RELU)),
        ("dense2", Dense(units=16, activation=Activation.RELU)),
        ("out", Dense(units=3)),
    ], seed=seed)


def conv_only(seed: int = 1002) -> NetworkGraph:
    """A single 3-filter, width-5 convolution layer."""
    return build_chain("conv_only", (100, 1), [
        ("conv1", Conv1D(filters=3, kernel_size=5)),
    ], seed=seed)


def pool_only(seed: int = 1003) -> NetworkGraph:
    """A single width-5 max-pooling layer; carries no parameters."""
    return build_chain("pool_only", (100, 3), [
        ("pool1", MaxPool1D(pool_size=5, stride=5)),
    ], seed=seed)


def tiny_cnn(seed: int = 1004) -> NetworkGraph:
    """Small CNN (one conv, one dense, 10-node input): 69 parameters."""
    return build_chain("tiny_cnn", (10, 1), [
        ("conv1", Conv1D(filters=2, kernel_size=6,
                         activation=Activation.RELU)),
        ("flat1", Flatten()),
        ("out", Dense(units=5, activation=Activation.SOFTMAX)),
    ], seed=seed)


def force_calibration(seed: int = 1005) -> NetworkGraph:
    """2-6-12-4-1 regression net mapping raw touch signals to force."""
    return build_chain("force_calibration", (2,), [
        ("dense1", Dense(units=6, activation=Activation.RELU)),
        ("dense2", Dense(units=12, activation=Activation.RELU)),
        ("dense3", Dense(units=4, activation=Activation.RELU)),
        ("out", Dense(units=1)),
    ], seed=seed)


def system_id(seed: int = 1006) -> NetworkGraph:
    """Plant-identification net: two hidden layers of five neurons."""
    return build_chain("system_id", (2,), [
        ("dense1", Dense(units=5, activation=Activation.TANH)),
        ("dense2", Dense(units=5, activation=Activation.TANH)),
        ("out", Dense(units=1)),
    ], seed=seed)


def terrain_classifier(seed: int = 1007) -> NetworkGraph:
    """400-50-10-2 softmax classifier over windowed tire-sensor data."""
    return build_chain("terrain_classifier", (400,), [
        ("dense1", Dense(units=50, activation=Activation.RELU)),
        ("dense2", Dense(units=10, activation=Activation.RELU)),
        ("out", Dense(units=2, activation=Activation.SOFTMAX)),
    ], seed=seed)


FIXTURE_BUILDERS = {
    "composite_cnn": composite_cnn,
    "conv_only": conv_only,
    "pool_only": pool_only,
    "tiny_cnn": tiny_cnn,
    "force_calibration": force_calibration,
    "system_id": system_id,
    "terrain_classifier": terrain_classifier,
}

#: Corpus entries whose weights go to a binary sidecar instead of inline JSON.
SIDECAR_FIXTURES = ("terrain_classifier",)


def write_fixture_corpus(directory: str) -> list[str]:
    """Write every fixture model file; returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    written = []
    for name, builder in FIXTURE_BUILDERS.items():
        graph = builder()
        doc_path = os.path.join(directory, f"{name}.json")
        if name in SIDECAR_FIXTURES:
            text, blob = serialize_model(graph, sidecar=True)
            side_path = os.path.join(directory, f"{name}.nnwb")
            with open(side_path, "wb") as fh:
                fh.write(blob)
            written.append(side_path)
        else:
            text = serialize_model(graph)
        with open(doc_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(doc_path)
    return sorted(written)
