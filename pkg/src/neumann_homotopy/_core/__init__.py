"""Hot kernels: compiled (Cython) when available, pure Python otherwise.

Set ``NEUMANN_HOMOTOPY_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _kernels_py


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module(f"{__name__}._kernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    if os.environ.get("NEUMANN_HOMOTOPY_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python", _kernels_py
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", _kernels_py


BACKEND, kernels = _select()

__all__ = ["BACKEND", "kernels", "load_backend"]
