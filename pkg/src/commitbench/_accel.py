"""Optional numba acceleration for the hot kernels.

Loop-style kernels are compiled with numba when it is available; where a
loop would be slow in plain Python a vectorized twin is used instead (see
``_kernels``). Set ``COMMITBENCH_DISABLE_NUMBA=1``
to force the pure-numpy path (useful for debugging and for the benchmark).
"""
import os

DISABLE_ENV = "COMMITBENCH_DISABLE_NUMBA"

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def numba_enabled():
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    return HAS_NUMBA and flag not in ("1", "true", "yes", "on")


USE_NUMBA = numba_enabled()


def maybe_njit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` unless disabled.

    The undecorated function stays reachable as ``fn.py_func`` in both
    modes so benchmarks can compare the two paths in-process.
    """
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
