"""Kernel backend selection: compiled extension if built, else pure Python.

Set ``RDA_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("RDA_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

gs_sweeps = _impl.gs_sweeps
ilu0_factor = _impl.ilu0_factor
ilu0_solve = _impl.ilu0_solve
