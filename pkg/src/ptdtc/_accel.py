"""Numba switch for the hot kernels.

Set ``PTDTC_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/NumPy. Results are identical up to floating-point reassociation; the
benchmark in ``benchmarks/bench_kernels.py`` compares the two paths.
"""
import os

_FLAG = os.environ.get("PTDTC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def kernel(fn):
    """Compile ``fn`` with ``numba.njit`` unless the fallback path is selected."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
