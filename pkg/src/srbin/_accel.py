"""Numba switch.

Set ``SRBIN_DISABLE_NUMBA=1`` to run every kernel through its numpy
implementation instead. The flag is read once, at import time.
"""
import os

_FLAG = os.environ.get("SRBIN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched.

    The undecorated function stays importable as ``fn.py_func`` either way so
    tests can run the loop version without a compiler.
    """
    if numba is None:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
