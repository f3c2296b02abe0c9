"""Fixed-point simulation of the forward pass and its fidelity report.

Every tensor entering the layer math (input, weights, biases, and each
layer's post-activation output) is snapped to a signed two's-complement
grid with per-tensor fraction bits; the layer arithmetic itself stays the
interpreter's float32 path.  Errors are reported against the 32-bit
fixed-point run, not against plain float.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .interpreter import apply_layer, forward_traced
from .ir import (
    INPUT_ID,
    NetworkGraph,
    TensorData,
    execution_order,
    infer_shapes,
)

TOTAL_BITS_CHOICES = (2, 8, 16, 32)

#: Guard inside log2 so all-zero tensors get a defined format.
_RANGE_EPS = 1e-12


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format: total bit width and fraction bits."""

    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.total_bits not in TOTAL_BITS_CHOICES:
            raise DomainError(
                f"total_bits must be one of {TOTAL_BITS_CHOICES}, "
                f"got {self.total_bits}"
            )
        if not 0 <= self.frac_bits <= self.total_bits - 1:
            raise DomainError(
                f"frac_bits must be in [0, {self.total_bits - 1}], "
                f"got {self.frac_bits}"
            )

    @property
    def int_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def int_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1


def quantize_value(x, q: QFormat):
    """Round-half-away-from-zero onto q's grid, saturating at the rails.

    Accepts a scalar or array; returns float64 so that every representable
    fixed-point value (up to 32 bits) survives exactly.
    """
    value, _ = quantize_counted(x, q)
    if np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return float(value)
    return value


def quantize_counted(x, q: QFormat):
    """quantize_value plus the number of saturated elements."""
    scaled = np.asarray(x, dtype=np.float64) * float(1 << q.frac_bits)
    rounded = np.floor(np.abs(scaled) + 0.5) * np.sign(scaled)
    saturated = int(np.count_nonzero((rounded < q.int_min) |
                                     (rounded > q.int_max)))
    clipped = np.clip(rounded, q.int_min, q.int_max)
    return clipped / float(1 << q.frac_bits), saturated


def fraction_bits_for(max_abs: float, total_bits: int) -> int:
    """Per-tensor policy: spend what the integer part needs, keep the rest."""
    int_bits = max(0, math.ceil(math.log2(max_abs + _RANGE_EPS)))
    return max(0, total_bits - 1 - int_bits)


def _calibrate_ranges(graph: NetworkGraph,
                      inputs: list[TensorData]) -> dict[str, float]:
    """Max |value| per tensor slot: weights statically, activations traced."""
    ranges: dict[str, float] = {}
    for lid, w in graph.weights.items():
        ranges[f"{lid}.kernel"] = float(np.abs(w.kernel.data).max())
        ranges[f"{lid}.bias"] = float(np.abs(w.bias.data).max())
    peak_in = 0.0
    peaks: dict[str, float] = {lid: 0.0 for lid in graph.layers}
    for x in inputs:
        peak_in = max(peak_in, float(np.abs(x.data).max()))
        for lid, out in forward_traced(graph, x).items():
            peaks[lid] = max(peaks[lid], float(np.abs(out.data).max()))
    ranges[INPUT_ID] = peak_in
    for lid, peak in peaks.items():
        ranges[f"{lid}.out"] = peak
    return ranges


class _FixedPass:
    """One quantisation configuration: formats resolved, weights pre-snapped."""

    def __init__(self, graph: NetworkGraph, total_bits: int,
                 ranges: dict[str, float], frac_override: int | None = None):
        self.graph = graph
        self.shapes = infer_shapes(graph)
        self.order = execution_order(graph)
        self.saturations = 0

        def fmt(slot: str) -> QFormat:
            if frac_override is not None:
                return QFormat(total_bits, frac_override)
            return QFormat(total_bits,
                           fraction_bits_for(ranges[slot], total_bits))

        self.input_format = fmt(INPUT_ID)
        self.out_formats = {lid: fmt(f"{lid}.out") for lid in graph.layers}
        self.weight_arrays = {}
        for lid, w in graph.weights.items():
            kernel, n = quantize_counted(w.kernel.as_array(), fmt(f"{lid}.kernel"))
            self.saturations += n
            bias, n = quantize_counted(w.bias.as_array(), fmt(f"{lid}.bias"))
            self.saturations += n
            self.weight_arrays[lid] = (kernel.astype(np.float32),
                                       bias.astype(np.float32))

    def run(self, x: TensorData) -> np.ndarray:
        current, n = quantize_counted(x.as_array(), self.input_format)
        self.saturations += n
        current = current.astype(np.float32)
        outputs: dict[str, np.ndarray] = {}
        for lid in self.order:
            spec = self.graph.layers[lid]
            pred = spec.inputs[0]
            if pred == INPUT_ID:
                src, in_shape = current, self.graph.input_shape
            else:
                src, in_shape = outputs[pred], self.shapes[pred]
            kernel, bias = self.weight_arrays.get(lid, (None, None))
            raw = apply_layer(spec.kind, src, kernel, bias, in_shape)
            snapped, n = quantize_counted(raw, self.out_formats[lid])
            self.saturations += n
            outputs[lid] = snapped.astype(np.float32)
        return outputs[self.graph.output_id]


def forward_fixed(graph: NetworkGraph, x: TensorData, total_bits: int,
                  frac_bits: int | None = None) -> TensorData:
    """Forward pass at a given total bit width.

    With frac_bits=None the per-tensor policy calibrates on this input
    alone; an explicit frac_bits applies one format to every tensor.
    """
    ranges = None if frac_bits is not None else _calibrate_ranges(graph, [x])
    run = _FixedPass(graph, total_bits, ranges or {}, frac_override=frac_bits)
    return TensorData.from_array(run.run(x))


@dataclass
class FidelityEntry:
    epsilon: float
    max_error: float
    saturations: int


@dataclass
class FidelityReport:
    """Mean/max absolute output error per bit width vs the 32-bit run."""

    entries: dict[int, FidelityEntry]

    def to_text(self) -> str:
        lines = [
            f"{'bits':>5}  {'mean_abs_err':>13}  {'max_abs_err':>12}  "
            f"{'saturations':>11}",
        ]
        for k in sorted(self.entries):
            e = self.entries[k]
            lines.append(f"{k:>5}  {e.epsilon:>13.8f}  {e.max_error:>12.8f}  "
                         f"{e.saturations:>11d}")
        return "\n".join(lines)

    def to_json_dict(self) -> dict:
        return {
            str(k): {"epsilon": e.epsilon, "max": e.max_error,
                     "saturations": e.saturations}
            for k, e in self.entries.items()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def fidelity_report(graph: NetworkGraph, inputs: list[TensorData],
                    ks: list[int]) -> FidelityReport:
    """Error of each k-bit run against the 32-bit fixed-point baseline.

    Calibration happens once over the supplied inputs and is shared by all
    bit widths, so shrinking k only coarsens the grids.
    """
    if not inputs:
        raise DomainError("fidelity report needs at least one input")
    ranges = _calibrate_ranges(graph, inputs)

    baseline_pass = _FixedPass(graph, 32, ranges)
    baselines = [baseline_pass.run(x) for x in inputs]

    entries: dict[int, FidelityEntry] = {}
    for k in ks:
        run = _FixedPass(graph, int(k), ranges)
        diffs = []
        for x, base in zip(inputs, baselines):
            out = run.run(x)
            diffs.append(np.abs(out.astype(np.float64) -
                                base.astype(np.float64)))
        flat = np.concatenate([d.ravel() for d in diffs])
        entries[int(k)] = FidelityEntry(
            epsilon=float(flat.mean()),
            max_error=float(flat.max()),
            saturations=run.saturations,
        )
    return FidelityReport(entries)
