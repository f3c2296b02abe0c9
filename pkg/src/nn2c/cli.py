"""Batch command-line front end: parse, analyse, generate.

Exit codes are stable: 0 success, 1 parse/validation failure, 2 footprint
rejection, 3 I/O failure.  Diagnostics go to stderr, data to stdout.
Vectors are exchanged as CSV, one flattened row-major sample per line.
If ``model.json`` sits next to a ``model.nnwb`` file, the sidecar is
picked up automatically.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .codegen import CodegenOptions, footprint, generate_code
from .errors import ModelError
from .interpreter import forward
from .ir import (
    NetworkGraph,
    TensorData,
    execution_order,
    infer_shapes,
    kind_name,
    param_count,
)
from .parser import parse_model
from .quantizer import fidelity_report, forward_fixed

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TOO_BIG = 2
EXIT_IO = 3


class _ArgumentParser(argparse.ArgumentParser):
    """argparse's default usage-error exit code is 2, which this CLI
    reserves for footprint rejection; usage errors are exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load_graph(model_path: str) -> NetworkGraph:
    with open(model_path, "rb") as fh:
        text = fh.read()
    sidecar = None
    side_path = os.path.splitext(model_path)[0] + ".nnwb"
    if os.path.exists(side_path):
        with open(side_path, "rb") as fh:
            sidecar = fh.read()
    return parse_model(text, sidecar)


def _read_input_rows(csv_path: str, graph: NetworkGraph) -> list[TensorData]:
    width = math.prod(graph.input_shape)
    rows = []
    with open(csv_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != width:
                raise ModelError(
                    f"{csv_path}:{lineno}: row has {len(cells)} values, "
                    f"network input needs {width}"
                )
            try:
                values = np.asarray([float(c) for c in cells],
                                    dtype=np.float32)
            except ValueError as exc:
                raise ModelError(f"{csv_path}:{lineno}: {exc}") from None
            rows.append(TensorData(graph.input_shape, values))
    return rows


def _format_row(tensor: TensorData) -> str:
    return ",".join(f"{float(v):.9g}" for v in tensor.data)


def _parse_bits_list(text: str) -> list[int]:
    try:
        bits = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ModelError(f"bad --bits value {text!r}: {exc}") from None
    if not bits:
        raise ModelError(f"bad --bits value {text!r}: no bit widths")
    return bits


# --- subcommands -------------------------------------------------------------

def _cmd_inspect(args) -> int:
    graph = _load_graph(args.model)
    shapes = infer_shapes(graph)
    print(f"model {graph.name!r}  input {list(graph.input_shape)}")
    header = f"{'id':<16} {'kind':<10} {'output':<16} {'params':>8}"
    print(header)
    print("-" * len(header))
    for lid in execution_order(graph):
        spec = graph.layers[lid]
        w = graph.weights.get(lid)
        count = (w.kernel.size + w.bias.size) if w else 0
        print(f"{lid:<16} {kind_name(spec.kind):<10} "
              f"{str(list(shapes[lid])):<16} {count:>8}")
    print(f"total parameters: {param_count(graph)}")
    return EXIT_OK


def _cmd_check(args) -> int:
    graph = _load_graph(args.model)
    report = footprint(graph, args.flash_bits, args.gamma, args.bits)
    print(report.to_text())
    return EXIT_OK if report.fits else EXIT_TOO_BIG


def _cmd_eval(args) -> int:
    graph = _load_graph(args.model)
    for row in _read_input_rows(args.inputs, graph):
        if args.fixed is None:
            out = forward(graph, row)
        else:
            out = forward_fixed(graph, row, args.fixed)
        print(_format_row(out))
    return EXIT_OK


def _cmd_quantize_report(args) -> int:
    graph = _load_graph(args.model)
    rows = _read_input_rows(args.inputs, graph)
    report = fidelity_report(graph, rows, _parse_bits_list(args.bits))
    print(report.to_text())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK


def _cmd_codegen(args) -> int:
    graph = _load_graph(args.model)
    bundle = generate_code(graph, CodegenOptions(prefix=args.prefix))
    os.makedirs(args.out, exist_ok=True)
    for filename in sorted(bundle.files):
        path = os.path.join(args.out, filename)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(bundle.files[filename])
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="nn2c",
        description="Compile trained feed-forward networks into "
                    "allocation-free C for microcontrollers.",
    )
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_ArgumentParser)

    p = sub.add_parser("inspect", help="per-layer summary and parameter count")
    p.add_argument("model")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("check", help="flash footprint verdict")
    p.add_argument("model")
    p.add_argument("--flash-bits", type=int, required=True,
                   help="flash budget S in bits")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="usable fraction of flash (0, 1]")
    p.add_argument("--bits", type=int, default=32,
                   help="bits per stored parameter")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("eval", help="run the reference forward pass over CSV")
    p.add_argument("model")
    p.add_argument("--inputs", required=True, help="CSV file, one row per sample")
    p.add_argument("--fixed", type=int, default=None, metavar="K",
                   help="simulate K-bit fixed point instead of float32")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("quantize-report",
                       help="fixed-point fidelity vs the 32-bit baseline")
    p.add_argument("model")
    p.add_argument("--inputs", required=True)
    p.add_argument("--bits", default="2,8,16",
                   help="comma-separated bit widths (default 2,8,16)")
    p.add_argument("--json", default=None, metavar="PATH",
                   help="also write the report as JSON")
    p.set_defaults(func=_cmd_quantize_report)

    p = sub.add_parser("codegen", help="emit the C source bundle")
    p.add_argument("model")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--prefix", default=None,
                   help="symbol prefix (default: model name)")
    p.set_defaults(func=_cmd_codegen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"nn2c: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"nn2c: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
