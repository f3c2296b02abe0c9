"""Load and save model documents (schema version 1).

The on-disk format is a JSON document describing input shape, layer
records and output id, with weights either inline as decimal arrays or in
a little-endian binary sidecar (magic ``NNWB``).  Layer records are built
through a registry keyed by type name, so new layer types plug in by
registration without touching the parser.
"""

from __future__ import annotations

import json
import struct
from typing import Callable, Optional

import numpy as np

from .errors import (
    DuplicateKeyError,
    MagicError,
    MissingWeightsError,
    ModelSyntaxError,
    TruncationError,
    UnsupportedLayerError,
    VersionError,
)
from .ir import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    INPUT_ID,
    LayerKind,
    LayerSpec,
    LayerWeights,
    MaxPool1D,
    MaxPool2D,
    NetworkGraph,
    TensorData,
    execution_order,
    is_weighted,
    kind_name,
    validate_graph,
)

SCHEMA_VERSION = 1
SIDECAR_MAGIC = b"NNWB"
SIDECAR_VERSION = 1

#: Keys every layer record may carry besides its hyperparameters.
_COMMON_KEYS = {"id", "type", "inputs", "weights_key"}

LayerBuilder = Callable[[dict, str], LayerKind]

_REGISTRY: dict[str, LayerBuilder] = {}


def register_layer(type_name: str):
    """Register a builder turning a raw layer record into a layer kind."""
    def decorator(builder: LayerBuilder) -> LayerBuilder:
        _REGISTRY[type_name] = builder
        return builder
    return decorator


def registered_layer_types() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


# --- record field helpers --------------------------------------------------

def _check_fields(record: dict, allowed: set, lid: str):
    extra = set(record) - _COMMON_KEYS - allowed
    if extra:
        raise ModelSyntaxError(
            f"layer {lid!r}: unknown field(s) {sorted(extra)}"
        )


def _positive_int(record: dict, key: str, lid: str,
                  default: Optional[int] = None) -> int:
    if key not in record:
        if default is not None:
            return default
        raise ModelSyntaxError(f"layer {lid!r}: missing field {key!r}")
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ModelSyntaxError(
            f"layer {lid!r}: field {key!r} must be a positive integer, "
            f"got {value!r}"
        )
    return value


def _activation(record: dict, lid: str) -> Activation:
    raw = record.get("activation", "linear")
    try:
        return Activation(raw)
    except ValueError:
        raise ModelSyntaxError(
            f"layer {lid!r}: unsupported activation {raw!r} "
            f"(supported: {', '.join(a.value for a in Activation)})"
        ) from None


def _padding(record: dict, lid: str) -> str:
    raw = record.get("padding", "valid")
    if raw not in ("valid", "same"):
        raise ModelSyntaxError(
            f"layer {lid!r}: padding must be 'valid' or 'same', got {raw!r}"
        )
    return raw


# --- builders for the six core layer types ---------------------------------

@register_layer("dense")
def _build_dense(record: dict, lid: str) -> LayerKind:
    _check_fields(record, {"units", "activation"}, lid)
    return Dense(units=_positive_int(record, "units", lid),
                 activation=_activation(record, lid))


@register_layer("conv1d")
def _build_conv1d(record: dict, lid: str) -> LayerKind:
    _check_fields(record, {"filters", "kernel_size", "stride", "padding",
                           "activation"}, lid)
    return Conv1D(
        filters=_positive_int(record, "filters", lid),
        kernel_size=_positive_int(record, "kernel_size", lid),
        stride=_positive_int(record, "stride", lid, default=1),
        padding=_padding(record, lid),
        activation=_activation(record, lid),
    )


@register_layer("conv2d")
def _build_conv2d(record: dict, lid: str) -> LayerKind:
    _check_fields(record, {"filters", "kernel_h", "kernel_w", "stride_h",
                           "stride_w", "padding", "activation"}, lid)
    return Conv2D(
        filters=_positive_int(record, "filters", lid),
        kernel_h=_positive_int(record, "kernel_h", lid),
        kernel_w=_positive_int(record, "kernel_w", lid),
        stride_h=_positive_int(record, "stride_h", lid, default=1),
        stride_w=_positive_int(record, "stride_w", lid, default=1),
        padding=_padding(record, lid),
        activation=_activation(record, lid),
    )


@register_layer("maxpool1d")
def _build_maxpool1d(record: dict, lid: str) -> LayerKind:
    _check_fields(record, {"pool_size", "stride"}, lid)
    pool = _positive_int(record, "pool_size", lid)
    # omitted stride defaults to the pool size
    return MaxPool1D(pool_size=pool,
                     stride=_positive_int(record, "stride", lid, default=pool))


@register_layer("maxpool2d")
def _build_maxpool2d(record: dict, lid: str) -> LayerKind:
    _check_fields(record, {"pool_h", "pool_w", "stride_h", "stride_w"}, lid)
    pool_h = _positive_int(record, "pool_h", lid)
    pool_w = _positive_int(record, "pool_w", lid)
    return MaxPool2D(
        pool_h=pool_h,
        pool_w=pool_w,
        stride_h=_positive_int(record, "stride_h", lid, default=pool_h),
        stride_w=_positive_int(record, "stride_w", lid, default=pool_w),
    )


@register_layer("flatten")
def _build_flatten(record: dict, lid: str) -> LayerKind:
    _check_fields(record, set(), lid)
    return Flatten()


# --- inline weight payloads ------------------------------------------------

def _parse_inline_tensor(payload, label: str) -> TensorData:
    if not isinstance(payload, dict) or set(payload) != {"shape", "data"}:
        raise ModelSyntaxError(
            f"weights entry {label!r} must be {{'shape': [...], 'data': [...]}}"
        )
    shape, data = payload["shape"], payload["data"]
    if not isinstance(shape, list) or \
            not all(isinstance(d, int) and not isinstance(d, bool)
                    for d in shape):
        raise ModelSyntaxError(f"weights entry {label!r}: bad shape {shape!r}")
    if not isinstance(data, list) or \
            not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in data):
        raise ModelSyntaxError(
            f"weights entry {label!r}: data must be a flat numeric list"
        )
    return TensorData(tuple(shape), np.asarray(data, dtype=np.float32))


def _resolve_weights(key: str, lid: str, inline: dict,
                     sidecar: dict[str, TensorData]) -> LayerWeights:
    parts = {}
    for part in ("kernel", "bias"):
        tensor = sidecar.get(f"{key}.{part}")
        if tensor is None and key in inline:
            entry = inline[key]
            if not isinstance(entry, dict):
                raise ModelSyntaxError(f"weights entry {key!r} must be a map")
            if part in entry:
                tensor = _parse_inline_tensor(entry[part], f"{key}.{part}")
        if tensor is None:
            raise MissingWeightsError(
                f"layer {lid!r}: cannot resolve weights {key}.{part}"
            )
        parts[part] = tensor
    return LayerWeights(kernel=parts["kernel"], bias=parts["bias"])


# --- document parsing -------------------------------------------------------

def parse_model(document_text, sidecar: Optional[bytes] = None) -> NetworkGraph:
    """Parse a model document (+ optional weight sidecar) into a graph.

    The returned graph has passed full validation; sidecar tensors override
    inline ones of the same key.
    """
    if isinstance(document_text, bytes):
        try:
            document_text = document_text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelSyntaxError(f"document is not UTF-8: {exc}") from None
    try:
        doc = json.loads(document_text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelSyntaxError("top-level document must be a JSON object")

    allowed = {"format_version", "name", "input", "layers", "output",
               "weights"}
    extra = set(doc) - allowed
    if extra:
        raise ModelSyntaxError(f"unknown top-level field(s) {sorted(extra)}")
    for key in ("format_version", "name", "input", "layers", "output"):
        if key not in doc:
            raise ModelSyntaxError(f"missing top-level field {key!r}")

    if doc["format_version"] != SCHEMA_VERSION:
        raise VersionError(
            f"format_version {doc['format_version']!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    if not isinstance(doc["name"], str):
        raise ModelSyntaxError("'name' must be a string")
    if not isinstance(doc["input"], dict) or set(doc["input"]) != {"shape"} \
            or not isinstance(doc["input"]["shape"], list):
        raise ModelSyntaxError("'input' must be {'shape': [...]}")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ModelSyntaxError("'layers' must be a non-empty list")
    if not isinstance(doc["output"], str):
        raise ModelSyntaxError("'output' must be a layer id string")
    inline = doc.get("weights", {})
    if not isinstance(inline, dict):
        raise ModelSyntaxError("'weights' must be a map")

    sidecar_tensors = read_weight_sidecar(sidecar) if sidecar else {}

    layers: dict[str, LayerSpec] = {}
    weights: dict[str, LayerWeights] = {}
    for record in doc["layers"]:
        if not isinstance(record, dict):
            raise ModelSyntaxError("each layer record must be a JSON object")
        lid = record.get("id")
        if not isinstance(lid, str) or not lid or lid == INPUT_ID:
            raise ModelSyntaxError(f"bad layer id {lid!r}")
        if lid in layers:
            raise ModelSyntaxError(f"duplicate layer id {lid!r}")
        type_name = record.get("type")
        if not isinstance(type_name, str):
            raise ModelSyntaxError(f"layer {lid!r}: missing type")
        builder = _REGISTRY.get(type_name)
        if builder is None:
            raise UnsupportedLayerError(
                f"unsupported layer type {type_name!r} (layer {lid!r})"
            )
        inputs = record.get("inputs")
        if not isinstance(inputs, list) or \
                not all(isinstance(i, str) for i in inputs):
            raise ModelSyntaxError(
                f"layer {lid!r}: 'inputs' must be a list of layer ids"
            )
        kind = builder(record, lid)
        layers[lid] = LayerSpec(id=lid, kind=kind, inputs=tuple(inputs))

        weights_key = record.get("weights_key")
        if is_weighted(kind):
            if not isinstance(weights_key, str):
                raise MissingWeightsError(
                    f"layer {lid!r} needs weights but carries no weights_key"
                )
            weights[lid] = _resolve_weights(weights_key, lid, inline,
                                            sidecar_tensors)
        elif weights_key is not None:
            raise ModelSyntaxError(
                f"layer {lid!r} ({kind_name(kind)}) carries no weights; "
                "drop its weights_key"
            )

    graph = NetworkGraph(
        name=doc["name"],
        input_shape=tuple(doc["input"]["shape"]),
        layers=layers,
        weights=weights,
        output_id=doc["output"],
    )
    validate_graph(graph)
    return graph


# --- serialisation ----------------------------------------------------------

def _kind_record(kind: LayerKind) -> dict:
    if isinstance(kind, Dense):
        return {"units": kind.units, "activation": kind.activation.value}
    if isinstance(kind, Conv1D):
        return {"filters": kind.filters, "kernel_size": kind.kernel_size,
                "stride": kind.stride, "padding": kind.padding,
                "activation": kind.activation.value}
    if isinstance(kind, Conv2D):
        return {"filters": kind.filters, "kernel_h": kind.kernel_h,
                "kernel_w": kind.kernel_w, "stride_h": kind.stride_h,
                "stride_w": kind.stride_w, "padding": kind.padding,
                "activation": kind.activation.value}
    if isinstance(kind, MaxPool1D):
        return {"pool_size": kind.pool_size, "stride": kind.stride}
    if isinstance(kind, MaxPool2D):
        return {"pool_h": kind.pool_h, "pool_w": kind.pool_w,
                "stride_h": kind.stride_h, "stride_w": kind.stride_w}
    return {}


def serialize_model(graph: NetworkGraph, sidecar: bool = False):
    """Graph back to document text; weight bits survive the round trip.

    With sidecar=True the weights move to NNWB bytes and the function
    returns (document_text, sidecar_bytes).
    """
    records = []
    inline: dict[str, dict] = {}
    tensors: dict[str, TensorData] = {}
    for lid in execution_order(graph):
        spec = graph.layers[lid]
        record = {"id": lid, "type": kind_name(spec.kind),
                  "inputs": list(spec.inputs)}
        record.update(_kind_record(spec.kind))
        w = graph.weights.get(lid)
        if w is not None:
            record["weights_key"] = lid
            if sidecar:
                tensors[f"{lid}.kernel"] = w.kernel
                tensors[f"{lid}.bias"] = w.bias
            else:
                inline[lid] = {
                    "kernel": {"shape": list(w.kernel.shape),
                               "data": [float(v) for v in w.kernel.data]},
                    "bias": {"shape": list(w.bias.shape),
                             "data": [float(v) for v in w.bias.data]},
                }
        records.append(record)

    doc = {
        "format_version": SCHEMA_VERSION,
        "name": graph.name,
        "input": {"shape": list(graph.input_shape)},
        "layers": records,
        "output": graph.output_id,
    }
    if inline:
        doc["weights"] = inline
    text = json.dumps(doc, indent=2) + "\n"
    if sidecar:
        return text, write_weight_sidecar(tensors)
    return text


# --- binary weight sidecar ---------------------------------------------------

def read_weight_sidecar(data: bytes) -> dict[str, TensorData]:
    """Decode NNWB bytes into a map of tensor key to tensor."""
    view = memoryview(data)
    offset = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise TruncationError(
                f"sidecar truncated while reading {what} "
                f"(need {n} bytes at offset {offset}, have "
                f"{len(view) - offset})"
            )
        chunk = view[offset:offset + n]
        offset += n
        return chunk

    if bytes(take(4, "magic")) != SIDECAR_MAGIC:
        raise MagicError("sidecar does not start with magic 'NNWB'")
    (version,) = struct.unpack("<H", take(2, "version"))
    if version != SIDECAR_VERSION:
        raise VersionError(f"sidecar version {version}, "
                           f"expected {SIDECAR_VERSION}")
    (count,) = struct.unpack("<I", take(4, "tensor count"))

    tensors: dict[str, TensorData] = {}
    for index in range(count):
        (key_len,) = struct.unpack("<H", take(2, f"key length #{index}"))
        key = bytes(take(key_len, f"key #{index}")).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1, f"rank of {key!r}"))
        dims = struct.unpack(f"<{rank}I",
                             take(4 * rank, f"dims of {key!r}"))
        n_values = 1
        for d in dims:
            n_values *= d
        raw = take(4 * n_values, f"values of {key!r}")
        if key in tensors:
            raise DuplicateKeyError(f"sidecar repeats tensor key {key!r}")
        values = np.frombuffer(raw, dtype="<f4").astype(np.float32)
        tensors[key] = TensorData(dims, values)
    if offset != len(view):
        raise ModelSyntaxError(
            f"sidecar has {len(view) - offset} trailing bytes"
        )
    return tensors


def write_weight_sidecar(tensors: dict[str, TensorData]) -> bytes:
    """Encode tensors as NNWB bytes (little-endian, float32)."""
    out = bytearray()
    out += SIDECAR_MAGIC
    out += struct.pack("<H", SIDECAR_VERSION)
    out += struct.pack("<I", len(tensors))
    for key, tensor in tensors.items():
        encoded = key.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<B", len(tensor.shape))
        out += struct.pack(f"<{len(tensor.shape)}I", *tensor.shape)
        out += tensor.data.astype("<f4").tobytes()
    return bytes(out)
