#!/usr/bin/env python3
"""Compare forward-pass throughput of the numba and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeats N]
The first numba call includes JIT compilation; a warmup pass absorbs it.
"""

import argparse
import time

import numpy as np

from nn2c import forward, kernels
from nn2c.fixtures import FIXTURE_BUILDERS
from nn2c.ir import TensorData


def time_backend(name, graph, inputs, repeats):
    kernels.select(name)
    forward(graph, inputs[0])  # warmup (and JIT compile for numba)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for x in inputs:
            forward(graph, x)
        best = min(best, (time.perf_counter() - start) / len(inputs))
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--samples", type=int, default=50)
    args = ap.parse_args()

    backends = ["numpy"]
    try:
        kernels.select("numba")
        backends.append("numba")
    except ImportError:
        print("numba not installed; benchmarking numpy only")

    rng = np.random.default_rng(0)
    print(f"{'model':<20} " + " ".join(f"{b + ' [us]':>12}" for b in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for name, builder in FIXTURE_BUILDERS.items():
        graph = builder()
        inputs = [
            TensorData(graph.input_shape,
                       rng.uniform(-1, 1, graph.input_shape)
                          .astype(np.float32).ravel())
            for _ in range(args.samples)
        ]
        times = [time_backend(b, graph, inputs, args.repeats)
                 for b in backends]
        row = f"{name:<20} " + " ".join(f"{t * 1e6:>12.1f}" for t in times)
        if len(times) == 2:
            row += f"      {times[0] / times[1]:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
