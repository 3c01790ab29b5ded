"""Pick the compiled kernels when they are built, else the pure-Python ones.

Set ``BDCAT_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("BDCAT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
