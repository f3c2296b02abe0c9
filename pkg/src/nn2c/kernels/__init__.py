"""Backend selection for the layer kernels.

Two interchangeable implementations exist: numba-compiled scalar loops
(fast path) and pure numpy (fallback, always available).  Both produce
bit-identical float32 results.  The environment variable ``NN2C_BACKEND``
picks one at import time (``numba`` or ``numpy``); without it, numba is
used when importable.  ``select()`` switches at runtime, which the
benchmark harness and the backend-equivalence tests rely on.
"""

import os

from . import numpy_ops

BACKEND_ENV = "NN2C_BACKEND"

_active = None
_active_name = ""


def _load(name: str):
    if name == "numpy":
        return numpy_ops
    if name == "numba":
        from . import numba_ops
        return numba_ops
    raise ValueError(f"unknown kernel backend {name!r}")


def select(name: str):
    """Switch the active kernel backend; returns the backend module."""
    global _active, _active_name
    _active = _load(name)
    _active_name = name
    return _active


def active_backend():
    return _active


def active_backend_name() -> str:
    return _active_name


def _init_from_env():
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested:
        select(requested)
        return
    try:
        select("numba")
    except ImportError:
        select("numpy")


_init_from_env()
