"""Backend selection for the power-iteration kernel.

The compiled extension is preferred; set ``CERTIMEASURE_PURE_PYTHON=1`` to
force the numpy/scipy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
powers_block = _kernels_py.powers_block

if not os.environ.get("CERTIMEASURE_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        powers_block = _compiled.powers_block


def get_backend(name: str | None = None):
    """Return ``(name, powers_block)`` for ``name`` in {None, "cython", "python"}."""
    if name is None:
        return BACKEND, powers_block
    if name == "python":
        return "python", _kernels_py.powers_block
    if name == "cython":
        from . import _kernels as compiled

        return "cython", compiled.powers_block
    raise ValueError(f"unknown backend {name!r}")
