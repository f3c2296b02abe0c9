"""Translate a network graph into self-contained, allocation-free C.

Emission is plain text-template substitution, one helper routine per layer
kind, weights baked in as static const arrays.  The generated code uses
fixed-size static buffers and must reproduce the reference interpreter's
outputs; its only include is the standard math header.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DomainError, IdentifierError, UnsupportedLayerError
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
    activation_of,
    conv_axis_length,
    execution_order,
    kind_name,
    param_count,
    pool_axis_length,
    validate_graph,
)

_C_KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if int long register return short signed sizeof static
    struct switch typedef union unsigned void volatile while
""".split())

_ACT_CODES = {
    Activation.LINEAR: 0,
    Activation.RELU: 1,
    Activation.SIGMOID: 2,
    Activation.TANH: 3,
    Activation.SOFTMAX: 4,
}


@dataclass(frozen=True)
class CodegenOptions:
    prefix: Optional[str] = None
    float_literal_digits: int = 9


@dataclass
class SourceBundle:
    files: dict[str, str]
    entry_symbol: str


@dataclass
class FootprintReport:
    """Verdict of the flash bound P <= floor(gamma * S / b)."""

    param_count: int
    bits_per_param: int
    flash_bits: int
    gamma: float
    max_params: int
    weight_bytes: int
    buffer_bytes: int
    fits: bool

    def to_text(self) -> str:
        verdict = "fits" if self.fits else "DOES NOT FIT"
        return "\n".join([
            f"parameters:      {self.param_count}",
            f"bits per param:  {self.bits_per_param}",
            f"flash budget:    {self.flash_bits} bits x gamma {self.gamma}",
            f"max parameters:  {self.max_params}",
            f"weight bytes:    {self.weight_bytes}",
            f"buffer bytes:    {self.buffer_bytes} (static scratch, RAM)",
            f"verdict:         {verdict}",
        ])


def sanitize_identifier(name: str) -> str:
    """Coerce a string into a C identifier; refuse when nothing survives."""
    ident = re.sub(r"[^A-Za-z0-9_]", "_", name)
    ident = re.sub(r"_+", "_", ident).strip("_")
    if not ident:
        raise IdentifierError(f"cannot derive a C identifier from {name!r}")
    if ident[0].isdigit():
        ident = "n" + ident
    if ident.lower() in _C_KEYWORDS:
        ident += "_"
    return ident


def format_float(value: float, digits: int) -> str:
    text = f"{float(value):.{digits}g}"
    if "." not in text and "e" not in text and "inf" not in text \
            and "nan" not in text:
        text += "."
    return text + "f"


def _layer_symbols(order: list[str]) -> dict[str, str]:
    symbols: dict[str, str] = {}
    used: set[str] = set()
    for lid in order:
        base = sanitize_identifier(lid)
        sym = base
        n = 2
        while sym in used:
            sym = f"{base}_{n}"
            n += 1
        used.add(sym)
        symbols[lid] = sym
    return symbols


def _array_lines(values, digits: int, per_line: int = 8) -> list[str]:
    literals = [format_float(v, digits) for v in values]
    lines = []
    for i in range(0, len(literals), per_line):
        lines.append("    " + ", ".join(literals[i:i + per_line]) + ",")
    if lines:
        lines[-1] = lines[-1].rstrip(",")
    return lines


def _params_header(graph, order, symbols, prefix, digits) -> str:
    guard = f"{prefix.upper()}_PARAMS_H"
    out = [
        f"#ifndef {guard}",
        f"#define {guard}",
        "",
        f"/* Parameters for '{graph.name}': {param_count(graph)} values,",
        " * float32, row-major.  Generated by nn2c -- do not edit. */",
        "",
    ]
    emitted = False
    for lid in order:
        weights = graph.weights.get(lid)
        if weights is None:
            continue
        emitted = True
        for part, tensor in (("kernel", weights.kernel), ("bias", weights.bias)):
            name = f"{prefix}_{symbols[lid]}_{part}"
            out.append(f"static const float {name}[{tensor.size}] = {{")
            out.extend(_array_lines(tensor.data, digits))
            out.append("};")
            out.append("")
    if not emitted:
        out.append("/* this network has no trainable parameters */")
        out.append("")
    out.append(f"#endif /* {guard} */")
    out.append("")
    return "\n".join(out)


def _public_header(graph, prefix, in_len, out_len) -> str:
    guard = f"{prefix.upper()}_H"
    upper = prefix.upper()
    return "\n".join([
        f"#ifndef {guard}",
        f"#define {guard}",
        "",
        f"/* Forward pass for '{graph.name}'.",
        " * Generated by nn2c -- do not edit.",
        " *",
        " * Intermediate results live in static buffers, so the entry point",
        " * supports one caller at a time (single-thread MCU usage). */",
        "",
        f"#define {upper}_INPUT_LEN {in_len}",
        f"#define {upper}_OUTPUT_LEN {out_len}",
        "",
        f"void {prefix}_forward(const float *input, float *output);",
        "",
        f"#endif /* {guard} */",
        "",
    ])


_DENSE_TMPL = """\
static void {p}_dense(const float *x, int n_in, const float *w,
{pad}const float *b, int n_out, float *y)
{{
    int i, j;
    for (j = 0; j < n_out; ++j) {{
        float acc = b[j];
        for (i = 0; i < n_in; ++i) {{
            acc += x[i] * w[i * n_out + j];
        }}
        y[j] = acc;
    }}
}}
"""

_CONV1D_TMPL = """\
static void {p}_conv1d(const float *x, int length, int channels,
{pad}const float *w, const float *b, int filters,
{pad}int kernel, int stride, int pad_left,
{pad}int out_len, float *y)
{{
    int t, f, k, c, src;
    for (t = 0; t < out_len; ++t) {{
        for (f = 0; f < filters; ++f) {{
            float acc = b[f];
            for (k = 0; k < kernel; ++k) {{
                src = t * stride + k - pad_left;
                if (src < 0 || src >= length) {{
                    continue;
                }}
                for (c = 0; c < channels; ++c) {{
                    acc += x[src * channels + c]
                         * w[(k * channels + c) * filters + f];
                }}
            }}
            y[t * filters + f] = acc;
        }}
    }}
}}
"""

_CONV2D_TMPL = """\
static void {p}_conv2d(const float *x, int height, int width, int channels,
{pad}const float *w, const float *b, int filters,
{pad}int kernel_h, int kernel_w, int stride_h, int stride_w,
{pad}int pad_top, int pad_left, int out_h, int out_w,
{pad}float *y)
{{
    int r, s, f, i, j, c, src_r, src_c;
    for (r = 0; r < out_h; ++r) {{
        for (s = 0; s < out_w; ++s) {{
            for (f = 0; f < filters; ++f) {{
                float acc = b[f];
                for (i = 0; i < kernel_h; ++i) {{
                    src_r = r * stride_h + i - pad_top;
                    if (src_r < 0 || src_r >= height) {{
                        continue;
                    }}
                    for (j = 0; j < kernel_w; ++j) {{
                        src_c = s * stride_w + j - pad_left;
                        if (src_c < 0 || src_c >= width) {{
                            continue;
                        }}
                        for (c = 0; c < channels; ++c) {{
                            acc += x[(src_r * width + src_c) * channels + c]
                                 * w[((i * kernel_w + j) * channels + c)
                                     * filters + f];
                        }}
                    }}
                }}
                y[(r * out_w + s) * filters + f] = acc;
            }}
        }}
    }}
}}
"""

_MAXPOOL1D_TMPL = """\
static void {p}_maxpool1d(const float *x, int channels, int pool, int stride,
{pad}int out_len, float *y)
{{
    int t, c, k;
    for (t = 0; t < out_len; ++t) {{
        for (c = 0; c < channels; ++c) {{
            float m = x[t * stride * channels + c];
            for (k = 1; k < pool; ++k) {{
                float v = x[(t * stride + k) * channels + c];
                if (v > m) {{
                    m = v;
                }}
            }}
            y[t * channels + c] = m;
        }}
    }}
}}
"""

_MAXPOOL2D_TMPL = """\
static void {p}_maxpool2d(const float *x, int width, int channels,
{pad}int pool_h, int pool_w, int stride_h, int stride_w,
{pad}int out_h, int out_w, float *y)
{{
    int r, s, c, i, j;
    for (r = 0; r < out_h; ++r) {{
        for (s = 0; s < out_w; ++s) {{
            for (c = 0; c < channels; ++c) {{
                float m = x[(r * stride_h * width + s * stride_w)
                            * channels + c];
                for (i = 0; i < pool_h; ++i) {{
                    for (j = 0; j < pool_w; ++j) {{
                        float v = x[((r * stride_h + i) * width
                                     + (s * stride_w + j)) * channels + c];
                        if (v > m) {{
                            m = v;
                        }}
                    }}
                }}
                y[(r * out_w + s) * channels + c] = m;
            }}
        }}
    }}
}}
"""

_COPY_TMPL = """\
static void {p}_copy(const float *x, int n, float *y)
{{
    int i;
    for (i = 0; i < n; ++i) {{
        y[i] = x[i];
    }}
}}
"""

_ACT_TMPL = """\
static void {p}_activation(float *x, int n, int act)
{{
    int i;
    if (act == 1) {{ /* relu */
        for (i = 0; i < n; ++i) {{
            if (x[i] < 0.0f) {{
                x[i] = 0.0f;
            }}
        }}
    }} else if (act == 2) {{ /* sigmoid */
        for (i = 0; i < n; ++i) {{
            x[i] = 1.0f / (1.0f + (float)exp((double)-x[i]));
        }}
    }} else if (act == 3) {{ /* tanh */
        for (i = 0; i < n; ++i) {{
            x[i] = (float)tanh((double)x[i]);
        }}
    }} else if (act == 4) {{ /* softmax, max-subtracted */
        float m = x[0];
        float sum = 0.0f;
        for (i = 1; i < n; ++i) {{
            if (x[i] > m) {{
                m = x[i];
            }}
        }}
        for (i = 0; i < n; ++i) {{
            x[i] = (float)exp((double)(x[i] - m));
            sum += x[i];
        }}
        for (i = 0; i < n; ++i) {{
            x[i] /= sum;
        }}
    }}
}}
"""

_HELPER_TEMPLATES = {
    "dense": _DENSE_TMPL,
    "conv1d": _CONV1D_TMPL,
    "conv2d": _CONV2D_TMPL,
    "maxpool1d": _MAXPOOL1D_TMPL,
    "maxpool2d": _MAXPOOL2D_TMPL,
    "copy": _COPY_TMPL,
    "activation": _ACT_TMPL,
}


def _render_helper(name: str, prefix: str) -> str:
    tmpl = _HELPER_TEMPLATES[name]
    # continuation lines align under the opening parenthesis
    fn = f"static void {prefix}_{name}("
    return tmpl.format(p=prefix, pad=" " * len(fn))


def _emit_layer_call(spec, prefix, symbols, src_expr, dst_expr, in_shape,
                     out_shape):
    """The forward-function statements for one layer."""
    kind = spec.kind
    sym = symbols[spec.id]
    kname = kind_name(kind)
    stmts = []
    if isinstance(kind, Dense):
        stmts.append(
            f"{prefix}_dense({src_expr}, {in_shape[0]}, "
            f"{prefix}_{sym}_kernel, {prefix}_{sym}_bias, "
            f"{kind.units}, {dst_expr});"
        )
    elif isinstance(kind, Conv1D):
        out_len, pad_left = conv_axis_length(
            in_shape[0], kind.kernel_size, kind.stride, kind.padding)
        stmts.append(
            f"{prefix}_conv1d({src_expr}, {in_shape[0]}, {in_shape[1]}, "
            f"{prefix}_{sym}_kernel, {prefix}_{sym}_bias, {kind.filters}, "
            f"{kind.kernel_size}, {kind.stride}, {pad_left}, "
            f"{out_len}, {dst_expr});"
        )
    elif isinstance(kind, Conv2D):
        out_h, pad_top = conv_axis_length(
            in_shape[0], kind.kernel_h, kind.stride_h, kind.padding)
        out_w, pad_left = conv_axis_length(
            in_shape[1], kind.kernel_w, kind.stride_w, kind.padding)
        stmts.append(
            f"{prefix}_conv2d({src_expr}, {in_shape[0]}, {in_shape[1]}, "
            f"{in_shape[2]}, {prefix}_{sym}_kernel, {prefix}_{sym}_bias, "
            f"{kind.filters}, {kind.kernel_h}, {kind.kernel_w}, "
            f"{kind.stride_h}, {kind.stride_w}, {pad_top}, {pad_left}, "
            f"{out_h}, {out_w}, {dst_expr});"
        )
    elif isinstance(kind, MaxPool1D):
        out_len = pool_axis_length(in_shape[0], kind.pool_size, kind.stride)
        stmts.append(
            f"{prefix}_maxpool1d({src_expr}, {in_shape[1]}, "
            f"{kind.pool_size}, {kind.stride}, {out_len}, {dst_expr});"
        )
    elif isinstance(kind, MaxPool2D):
        out_h = pool_axis_length(in_shape[0], kind.pool_h, kind.stride_h)
        out_w = pool_axis_length(in_shape[1], kind.pool_w, kind.stride_w)
        stmts.append(
            f"{prefix}_maxpool2d({src_expr}, {in_shape[1]}, {in_shape[2]}, "
            f"{kind.pool_h}, {kind.pool_w}, {kind.stride_h}, {kind.stride_w}, "
            f"{out_h}, {out_w}, {dst_expr});"
        )
    elif isinstance(kind, Flatten):
        stmts.append(
            f"{prefix}_copy({src_expr}, {math.prod(in_shape)}, {dst_expr});"
        )
    else:
        raise UnsupportedLayerError(
            f"no emitter for layer kind {kname!r}"
        )
    act = activation_of(kind)
    if act is not Activation.LINEAR:
        stmts.append(
            f"{prefix}_activation({dst_expr}, {math.prod(out_shape)}, "
            f"{_ACT_CODES[act]});"
        )
    return stmts


def generate_code(graph: NetworkGraph,
                  options: CodegenOptions = CodegenOptions()) -> SourceBundle:
    """Emit <prefix>_params.h, <prefix>.h and <prefix>.c for a graph."""
    shapes = validate_graph(graph)
    order = execution_order(graph)
    prefix = sanitize_identifier(options.prefix if options.prefix is not None
                                 else graph.name)
    symbols = _layer_symbols(order)
    digits = options.float_literal_digits

    in_len = math.prod(graph.input_shape)
    out_len = math.prod(shapes[graph.output_id])

    helpers_needed = []
    for lid in order:
        kname = kind_name(graph.layers[lid].kind)
        helper = "copy" if kname == "flatten" else kname
        if helper not in helpers_needed:
            helpers_needed.append(helper)
    if any(activation_of(s.kind) is not Activation.LINEAR
           for s in graph.layers.values()):
        helpers_needed.append("activation")
    helpers_needed.sort(key=list(_HELPER_TEMPLATES).index)

    buffers = []
    for lid in order:
        if lid == graph.output_id:
            continue
        buffers.append(
            f"static float {prefix}_buf_{symbols[lid]}"
            f"[{math.prod(shapes[lid])}];"
        )

    body = []
    for lid in order:
        spec = graph.layers[lid]
        pred = spec.inputs[0]
        if pred == INPUT_ID:
            src, in_shape = "input", graph.input_shape
        else:
            src, in_shape = f"{prefix}_buf_{symbols[pred]}", shapes[pred]
        dst = "output" if lid == graph.output_id \
            else f"{prefix}_buf_{symbols[lid]}"
        body.append(f"    /* {lid}: {kind_name(spec.kind)} "
                    f"{list(in_shape)} -> {list(shapes[lid])} */")
        body.extend("    " + s for s in
                    _emit_layer_call(spec, prefix, symbols, src, dst,
                                     in_shape, shapes[lid]))

    source = [
        f"/* Forward pass for '{graph.name}'.",
        " * Generated by nn2c -- do not edit. */",
        "",
        "#include <math.h>",
        "",
        f'#include "{prefix}_params.h"',
        f'#include "{prefix}.h"',
        "",
    ]
    if buffers:
        source.extend(buffers)
        source.append("")
    for helper in helpers_needed:
        source.append(_render_helper(helper, prefix))
    source.append(f"void {prefix}_forward(const float *input, float *output)")
    source.append("{")
    source.extend(body)
    source.append("}")
    source.append("")

    files = {
        f"{prefix}_params.h": _params_header(graph, order, symbols, prefix,
                                             digits),
        f"{prefix}.h": _public_header(graph, prefix, in_len, out_len),
        f"{prefix}.c": "\n".join(source),
    }
    return SourceBundle(files=files, entry_symbol=f"{prefix}_forward")


def footprint(graph: NetworkGraph, flash_bits: int, gamma,
              bits_per_param: int = 32) -> FootprintReport:
    """Evaluate the parameter budget floor(gamma * S / b) exactly."""
    if not isinstance(flash_bits, int) or flash_bits <= 0:
        raise DomainError(f"flash_bits must be a positive integer, "
                          f"got {flash_bits!r}")
    if bits_per_param not in (8, 16, 32):
        raise DomainError(f"bits_per_param must be 8, 16 or 32, "
                          f"got {bits_per_param!r}")
    try:
        gamma_frac = Fraction(gamma)
    except (ValueError, TypeError, OverflowError) as exc:
        raise DomainError(f"gamma must be a real number, got {gamma!r}") \
            from exc
    if not 0 < gamma_frac <= 1:
        raise DomainError(f"gamma must be in (0, 1], got {gamma!r}")

    count = param_count(graph)
    max_params = (gamma_frac.numerator * flash_bits) // \
                 (gamma_frac.denominator * bits_per_param)
    shapes = validate_graph(graph)
    buffer_bytes = 4 * sum(math.prod(shape) for lid, shape in shapes.items()
                           if lid != graph.output_id)
    return FootprintReport(
        param_count=count,
        bits_per_param=bits_per_param,
        flash_bits=flash_bits,
        gamma=float(gamma_frac),
        max_params=int(max_params),
        weight_bytes=count * bits_per_param // 8,
        buffer_bytes=buffer_bytes,
        fits=count <= max_params,
    )
