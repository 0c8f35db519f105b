"""Kernel backend selection.

The compiled extension is preferred; ``REHABFUZZ_PURE_PYTHON=1`` forces the
numpy fallback (handy for benchmarking and parity tests).
"""
from __future__ import annotations

import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if not os.environ.get("REHABFUZZ_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_backend(name: str | None = None):
    """Return a kernel module by name (``"cython"``/``"python"``), or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # raises ImportError if not built

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
