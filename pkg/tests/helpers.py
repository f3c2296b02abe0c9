"""Shared test utilities: random graph generation and backend switching."""

import contextlib

import numpy as np

from nn2c import kernels
from nn2c.fixtures import build_chain
from nn2c.ir import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    MaxPool1D,
    TensorData,
)


@contextlib.contextmanager
def use_backend(name):
    previous = kernels.active_backend_name()
    kernels.select(name)
    try:
        yield
    finally:
        kernels.select(previous)


def numba_available():
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


_HIDDEN_ACTS = (Activation.LINEAR, Activation.RELU, Activation.SIGMOID,
                Activation.TANH)


def random_chain(rng, name="random", max_depth=6):
    """Random valid layer chain with attached weights, small dims."""
    rank = int(rng.integers(1, 4))
    if rank == 1:
        shape = (int(rng.integers(2, 24)),)
    elif rank == 2:
        shape = (int(rng.integers(6, 28)), int(rng.integers(1, 4)))
    else:
        shape = (int(rng.integers(6, 14)), int(rng.integers(6, 14)),
                 int(rng.integers(1, 4)))
    depth = int(rng.integers(1, max_depth + 1))

    layers = []
    cur = shape
    for n in range(depth):
        act = _HIDDEN_ACTS[rng.integers(0, len(_HIDDEN_ACTS))]
        if len(cur) == 1:
            kind = Dense(units=int(rng.integers(1, 12)), activation=act)
            cur = (kind.units,)
        elif len(cur) == 2:
            choice = rng.integers(0, 3)
            if choice == 0 and cur[0] >= 2:
                k = int(rng.integers(1, min(cur[0], 5) + 1))
                s = int(rng.integers(1, 3))
                padding = "same" if rng.integers(0, 2) else "valid"
                kind = Conv1D(filters=int(rng.integers(1, 4)), kernel_size=k,
                              stride=s, padding=padding, activation=act)
                length = -(-cur[0] // s) if padding == "same" \
                    else (cur[0] - k) // s + 1
                cur = (length, kind.filters)
            elif choice == 1 and cur[0] >= 2:
                k = int(rng.integers(1, min(cur[0], 4) + 1))
                s = int(rng.integers(1, 3))
                kind = MaxPool1D(pool_size=k, stride=s)
                cur = ((cur[0] - k) // s + 1, cur[1])
            else:
                kind = Flatten()
                cur = (cur[0] * cur[1],)
        else:
            if rng.integers(0, 2) and min(cur[0], cur[1]) >= 2:
                kh = int(rng.integers(1, min(cur[0], 4) + 1))
                kw = int(rng.integers(1, min(cur[1], 4) + 1))
                padding = "same" if rng.integers(0, 2) else "valid"
                kind = Conv2D(filters=int(rng.integers(1, 4)),
                              kernel_h=kh, kernel_w=kw,
                              padding=padding, activation=act)
                oh = cur[0] if padding == "same" else cur[0] - kh + 1
                ow = cur[1] if padding == "same" else cur[1] - kw + 1
                cur = (oh, ow, kind.filters)
            else:
                kind = Flatten()
                cur = (cur[0] * cur[1] * cur[2],)
        layers.append((f"l{n}", kind))
    return build_chain(name, shape, layers, seed=int(rng.integers(0, 2**31)))


def random_input(rng, graph, low=-1.0, high=1.0):
    values = rng.uniform(low, high, graph.input_shape).astype(np.float32)
    return TensorData(graph.input_shape, values.ravel())
