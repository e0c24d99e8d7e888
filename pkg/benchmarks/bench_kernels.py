"""Benchmark the compiled objective/gradient kernel against the numpy
fallback.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from rank1glm._kernels import _py

try:
    from rank1glm._kernels import _core
except ImportError:
    _core = None

# (n, p, t, q) problem sizes: small single-session, multi-session stack,
# throughput-sized fit, and a wide FIR problem.
SIZES = [
    (300, 10, 3, 3),
    (1200, 10, 3, 12),
    (700, 46, 6, 2),
    (300, 10, 24, 3),
]


def bench(fn, args, repeats):
    fn(*args)  # warm up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(100):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / 100)
    return best


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'p':>4} {'t':>4} {'q':>4} {'numpy':>12} "
          f"{'cython':>12} {'speedup':>8}")
    for n, p, t, q in SIZES:
        X = np.ascontiguousarray(rng.standard_normal((n, p * t)))
        P = np.ascontiguousarray(rng.standard_normal((n, q)))
        y = rng.standard_normal(n)
        alpha = rng.standard_normal(t)
        beta = rng.standard_normal(p)
        w = rng.standard_normal(q)
        args = (X, P, y, alpha, beta, w)
        t_py = bench(_py.rank1_obj_grad, args, repeats)
        if _core is None:
            print(f"{n:>6} {p:>4} {t:>4} {q:>4} {t_py * 1e6:>10.1f}us "
                  f"{'n/a':>12} {'n/a':>8}")
            continue
        t_cy = bench(_core.rank1_obj_grad, args, repeats)
        print(f"{n:>6} {p:>4} {t:>4} {q:>4} {t_py * 1e6:>10.1f}us "
              f"{t_cy * 1e6:>10.1f}us {t_py / t_cy:>7.2f}x")


if __name__ == "__main__":
    main()
