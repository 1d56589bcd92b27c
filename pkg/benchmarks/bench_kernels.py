"""Compare the compiled and numpy assembly kernels.

    python3 benchmarks/bench_kernels.py [--sites 401 801 1601] [--repeat 3]

Prints best-of-``repeat`` wall time per kernel and backend, plus the largest
relative difference between the two backends' matrices.
"""

import argparse
import time

import numpy as np

from moire_spectra import _kernels
from moire_spectra.models import DEFAULT_TAIL_TOL, CoupledChain, ReducedChain, reduced_radius


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def reduced_case(n):
    m = ReducedChain(b=0.2)
    h = m.hopping
    ns = np.arange(-(n // 2), n // 2 + 1, dtype=np.int64)
    R = reduced_radius(h, m.theta, DEFAULT_TAIL_TOL)
    return "reduced_coupling_matrix", lambda k: k.reduced_coupling_matrix(ns, m.theta, m.b, h.A, h.B, h.Lz, R)


def interlayer_case(n):
    m = CoupledChain(b=0.3)
    h = m.hopping
    n1 = np.arange(-(n // 2), n // 2 + 1, dtype=np.int64)
    n2 = np.arange(-int(n / 2 / (1 - m.theta)), int(n / 2 / (1 - m.theta)) + 1, dtype=np.int64)
    return "interlayer_block", lambda k: k.interlayer_block(n1, n2, m.theta, m.b, h.A, h.B, h.Lz)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sites", type=int, nargs="+", default=[201, 401, 801])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    if _kernels.compiled is None:
        print("compiled backend unavailable; timing the numpy fallback only")
    print(f"{'kernel':<24}{'sites':>7}{'python s':>12}{'compiled s':>12}{'speedup':>9}{'max rel diff':>14}")
    for n in args.sites:
        for case in (reduced_case, interlayer_case):
            name, call = case(n)
            tp, mp = best_time(lambda: call(_kernels.pure), args.repeat)
            if _kernels.compiled is None:
                print(f"{name:<24}{n:>7}{tp:>12.4f}{'-':>12}{'-':>9}{'-':>14}")
                continue
            tc, mc = best_time(lambda: call(_kernels.compiled), args.repeat)
            scale = np.maximum(np.abs(mc), np.finfo(float).tiny)
            diff = float(np.max(np.abs(mp - mc) / scale))
            print(f"{name:<24}{n:>7}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
