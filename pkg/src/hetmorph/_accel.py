"""Kernel backend selection.

Hot loops are written once as plain Python/numpy-compatible functions and
compiled with numba when available. Set ``HETMORPH_BACKEND=numpy`` to force
the vectorized numpy fallbacks (useful for debugging and for environments
without a working LLVM).
"""

import os

BACKEND_ENV = "HETMORPH_BACKEND"


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None


def _detect():
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


BACKEND = _detect()
USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Compilation is lazy, so kernels that the active backend never dispatches
    to cost nothing. Callers pick the path with :data:`USE_NUMBA`.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda fn: fn
