#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

The jitted dispatchers expose the original Python function as ``py_func``,
so both paths run in one process. With EEIWFA_NO_NUMBA=1 (or numba missing)
only the fallback is timed.
"""

import time

import numpy as np

from eeiwfa._backend import USING_NUMBA
from eeiwfa import _kernels


def _time(fn, args, repeats):
    fn(*args)  # warm-up (and JIT compile)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench(name, kernel, args, repeats):
    jitted = _time(kernel, args, repeats)
    if USING_NUMBA:
        fallback = _time(kernel.py_func, args, max(repeats // 20, 5))
        print(f"{name:22s} numba {jitted * 1e6:9.2f} us   numpy "
              f"{fallback * 1e6:9.2f} us   speedup {fallback / jitted:6.1f}x")
    else:
        print(f"{name:22s} numpy {jitted * 1e6:9.2f} us   (numba disabled)")


def main():
    rng = np.random.default_rng(0)
    print(f"backend: {'numba' if USING_NUMBA else 'pure numpy'}")

    vals = np.sort(rng.uniform(-3.0, 3.0, size=8))[::-1].copy()
    bench("water_level (n=8)", _kernels.water_level, (vals, 4.0), 20000)

    d = rng.uniform(0.1, 5.0, size=8)
    rate0 = float(np.log1p(d * 0.5).sum())
    bench("dinkelbach_gains (n=8)", _kernels.dinkelbach_gains,
          (d, 1.0, rate0, 4.0, 1e-9, 200), 20000)

    A = rng.uniform(0.0, 1.0, size=(8, 8))
    np.fill_diagonal(A, 0.0)
    bench("power_iteration (8x8)", _kernels.power_iteration,
          (A, 1e-13, 20000), 2000)


if __name__ == "__main__":
    main()
