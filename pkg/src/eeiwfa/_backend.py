"""Kernel backend selection.

The hot inner loops (water-level search, the Dinkelbach iteration on
eigen-gains, nonnegative power iteration) are compiled with numba when it is
importable. Set EEIWFA_NO_NUMBA=1 to force the pure-numpy fallbacks; the
script benchmarks/bench_kernels.py compares the two paths.
"""

import os

ENV_FLAG = "EEIWFA_NO_NUMBA"


def _load_njit():
    if os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes"):
        return None
    try:
        from numba import njit
    except ImportError:
        return None
    return njit


_njit = _load_njit()
USING_NUMBA = _njit is not None


def jit_kernel(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if _njit is None:
        return func
    return _njit(func, cache=True)
