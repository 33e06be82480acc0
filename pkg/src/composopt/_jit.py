"""Backend switch for the hot numeric kernels.

Kernels are written once in a numba-compatible numpy subset. When numba is
importable and ``COMPOSOPT_DISABLE_JIT`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the plain numpy functions run.
"""
import os

_FLAG = os.environ.get("COMPOSOPT_DISABLE_JIT", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _FLAG in ("", "0", "false", "no")


def backend():
    return "numba" if USE_JIT else "numpy"


def kernel(fn):
    """Compile ``fn`` with numba when the JIT backend is active.

    The pure-python original stays reachable as ``fn.py_func`` in both modes,
    which is what the backend benchmark compares against.
    """
    if USE_JIT:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
