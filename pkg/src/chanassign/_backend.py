"""Backend selection for the numeric kernels.

Set ``CHANASSIGN_BACKEND=numpy`` to bypass numba and run the pure-numpy
paths. Any other value (or unset) uses numba when it is importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

BACKEND_ENV = "CHANASSIGN_BACKEND"


def numba_enabled() -> bool:
    return numba is not None and os.environ.get(BACKEND_ENV, "numba").lower() != "numpy"


def jit(fn):
    """``numba.njit(cache=True)`` if available, else the plain function.

    The undecorated function stays reachable as ``.py_func`` either way.
    """
    if numba is None:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True)(fn)


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"
