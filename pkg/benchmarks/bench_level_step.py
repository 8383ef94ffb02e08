"""Time the float level step with the compiled and the pure-Python kernels.

    python3 benchmarks/bench_level_step.py --depth 120 --repeat 3
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from bratteli_metric import _pykernels
from bratteli_metric.families import pascal, unordered_pairs
from bratteli_metric.graph import cotransitions

try:
    from bratteli_metric import _ckernels
except ImportError:
    _ckernels = None


def run(step, kernel, depth):
    rho = 1.0 - np.eye(kernel.widths[1])
    for n in range(1, depth):
        rho = step(rho, *kernel.csr(n + 1))
    return rho


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = [(f"pascal(2, {args.depth})", cotransitions(pascal(2, args.depth)), args.depth),
             ("unordered_pairs(5, 3)", cotransitions(unordered_pairs(5, 3)), 3)]
    print(f"{'graph':<24}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, k, depth in cases:
        tp, rp = best_of(lambda: run(_pykernels.level_step, k, depth), args.repeat)
        if _ckernels is None:
            print(f"{name:<24}{tp:>12.3f}{'n/a':>12}{'':>10}")
            continue
        tc, rc = best_of(lambda: run(_ckernels.level_step, k, depth), args.repeat)
        assert np.allclose(rp, rc, atol=1e-12), "backends disagree"
        print(f"{name:<24}{tp:>12.3f}{tc:>12.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
