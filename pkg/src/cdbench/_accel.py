"""JIT switch for the numeric kernels.

Kernels are written in the numba-compatible subset of Python. With numba
present they are compiled with ``@njit``; setting ``CDBENCH_DISABLE_NUMBA=1``
(or running without numba installed) leaves them as plain Python over numpy
arrays. Both paths receive identical pre-drawn random numbers, so results do
not depend on the backend.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLED = os.environ.get("CDBENCH_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = numba is not None and not DISABLED
BACKEND = "numba" if USE_NUMBA else "python"


def njit(*args, **kwargs):
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def py(fn):
    """Uncompiled version of a kernel."""
    return getattr(fn, "py_func", fn)
