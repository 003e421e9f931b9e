"""Benchmark the compiled GP-fitting kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from extquant._kernels import _pure
from extquant.distributions import GenPareto
from extquant.rng import substream

try:
    from extquant._kernels import _core
except ImportError:
    _core = None


def bench(fn, z, repeats):
    best = float("inf")
    result = None
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            result = fn(z, 500, 1e-8)
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best, result


def main():
    cases = [
        ("m=50 (one sim-study replicate)", 50, 200),
        ("m=500", 500, 50),
        ("m=10000 (acceptance-scale fit)", 10_000, 5),
    ]
    print(f"{'case':35s} {'pure':>12s} {'compiled':>12s} {'speedup':>9s}")
    for label, m, repeats in cases:
        z = np.ascontiguousarray(GenPareto(1.0, 0.2).sample(m, substream(7)))
        t_pure, r_pure = bench(_pure.gp_fit, z, max(1, repeats // 10))
        if _core is None:
            print(f"{label:35s} {t_pure * 1e3:10.3f} ms {'n/a':>12s} {'n/a':>9s}")
            continue
        t_core, r_core = bench(_core.gp_fit, z, repeats)
        same = "identical" if r_pure == r_core else "DIFFER"
        print(
            f"{label:35s} {t_pure * 1e3:10.3f} ms {t_core * 1e3:10.3f} ms "
            f"{t_pure / t_core:8.1f}x  results {same}"
        )


if __name__ == "__main__":
    main()
