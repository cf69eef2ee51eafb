"""Backend selection for the hot simulation kernels.

Kernels exist in two flavours: explicit loops compiled with numba, and
vectorised numpy. The active flavour is chosen at import time from the
``FIRMCLUSTER_BACKEND`` environment variable (``numba`` or ``numpy``) and can
be changed at runtime with :func:`set_backend` / :func:`use_backend`.
Both consume identical pre-drawn random numbers and share the numpy fitness
evaluation, so a seeded run follows the same trajectory on either backend.
"""

from __future__ import annotations

import contextlib
import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get("FIRMCLUSTER_BACKEND", "numba").strip().lower()
    if requested not in BACKENDS:
        raise ValueError(
            f"FIRMCLUSTER_BACKEND must be one of {BACKENDS}, got {requested!r}"
        )
    if requested == "numba" and not HAS_NUMBA:
        return "numpy"
    return requested


_backend = _initial_backend()


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or a no-op decorator without numba."""
    kwargs.setdefault("cache", True)
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
