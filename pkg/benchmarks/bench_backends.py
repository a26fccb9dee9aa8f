"""Timing comparison of the compiled and pure-Python kernel backends.

Runs the same workloads through both modules and prints per-kernel
medians with the speedup factor. Usage:

    python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

from momipde._kernels import pyfallback
from momipde.lmi import (BARRIER_GROWTH, BARRIER_T0, MAX_INNER, MAX_OUTER,
                         TOL_EVP_REL, _pack_system)
from momipde.problems import (bibo_plant, build_example1, build_example2,
                              lorenz_fuzzy_plant)

try:
    from momipde._kernels import _core
except ImportError:
    _core = None


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def workloads():
    rng = np.random.default_rng(0)

    raw = rng.standard_normal((12, 12))
    sym = (0.5 * (raw + raw.T)).ravel()
    spd = raw @ raw.T + 0.5 * np.eye(12)
    rhs = rng.standard_normal((12, 3)).ravel()

    ex2 = _pack_system(build_example2(bibo_plant(), [2.1412, 2.0705]))
    ex1 = _pack_system(build_example1(lorenz_fuzzy_plant(), [1.9009, 0.7914, 0.1585]))
    evp_args = (BARRIER_T0, BARRIER_GROWTH, TOL_EVP_REL, MAX_OUTER, MAX_INNER)

    def make(backend):
        return {
            "jacobi 12x12": lambda: backend.jacobi_eigenvalues(list(sym), 12),
            "spd_solve 12x12x3": lambda: backend.spd_solve(
                list(spd.ravel()), 12, list(rhs), 3),
            "evp linear plant (d=7)": lambda: backend.evp_solve(
                list(ex2[0]), list(ex2[1]), list(ex2[2]), list(ex2[3]),
                list(ex2[4]), 7, *evp_args),
            "evp fuzzy plant (d=12)": lambda: backend.evp_solve(
                list(ex1[0]), list(ex1[1]), list(ex1[2]), list(ex1[3]),
                list(ex1[4]), 12, *evp_args),
        }

    return make


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats per kernel (median reported)")
    args = parser.parse_args()

    make = workloads()
    pure = make(pyfallback)
    if _core is None:
        print("compiled extension not built; timing the pure backend only")
        for name, fn in pure.items():
            print(f"{name:<26} {time_call(fn, args.repeats) * 1e3:9.3f} ms")
        return

    comp = make(_core)
    print(f"{'kernel':<26} {'pure-python':>12} {'compiled':>12} {'speedup':>9}")
    for name in pure:
        tp = time_call(pure[name], args.repeats)
        tc = time_call(comp[name], args.repeats)
        print(f"{name:<26} {tp * 1e3:9.3f} ms {tc * 1e3:9.3f} ms {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
