"""Similarity kernel backends.

The compiled extension is preferred when present; the NumPy twin is the
reference implementation and the fallback. Selection happens here, once,
at import; ``FRAMESIFT_BACKEND=numpy|cython`` overrides it.
"""

from __future__ import annotations

import os

from . import _numpy

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"numpy": _numpy}
if _core is not None:
    _BACKENDS["cython"] = _core

MODE_QUERY = _numpy.MODE_QUERY
MODE_TOPK = _numpy.MODE_TOPK
MODE_OVERRIDE = _numpy.MODE_OVERRIDE


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def default_backend() -> str:
    env = os.environ.get("FRAMESIFT_BACKEND")
    if env:
        if env not in _BACKENDS:
            raise ValueError(
                f"FRAMESIFT_BACKEND={env!r} is not available (have {available_backends()})"
            )
        return env
    return "cython" if _core is not None else "numpy"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name is None:
        name = default_backend()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r} (have {available_backends()})") from None
