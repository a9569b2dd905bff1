"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Runs each hot kernel on small and large parameter vectors, plus the fused
run-loop on the rate-check workload, and prints a comparison table.

Usage: python benchmarks/bench_kernels.py [--reps 2000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dagrad import kernels
from dagrad.backend import NUMBA_ENABLED
from dagrad.numerics import make_rng


def best_of(fn, reps: int, inner: int = 1) -> float:
    """Best wall time over `reps` calls (seconds per call)."""
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_step_kernels(dim: int, reps: int):
    rng = make_rng(0)
    s = rng.normal(size=dim)
    nu = np.abs(rng.normal(size=dim)) + 0.1
    x = rng.normal(size=dim)
    x0 = rng.normal(size=dim)
    g = rng.normal(size=dim)
    g2 = np.ones(dim)
    m = rng.normal(size=dim)
    v = np.abs(rng.normal(size=dim))
    rows = []

    pairs = [
        ("madgrad_step", lambda f: f(s, nu, x, x0, g, 0.05, 0.6, 1e-6),
         kernels.madgrad_step_k, kernels.madgrad_step_k_np),
        ("madgrad_theory_step", lambda f: f(s, nu, x, x0, g, 0.05, 0.07, 0.6, g2),
         kernels.madgrad_theory_step_k, kernels.madgrad_theory_step_k_np),
        ("adagrad_da_step", lambda f: f(s, nu, x0, g, 0.05, 1e-6),
         kernels.adagrad_da_step_k, kernels.adagrad_da_step_k_np),
        ("adam_step", lambda f: f(m, v, v, x, g, 0.001, 0.9, 0.999, 1e-8, 0.5, 0.5, True),
         kernels.adam_step_k, kernels.adam_step_k_np),
        ("heavy_ball_step", lambda f: f(m, x, g, 0.01, 0.9),
         kernels.heavy_ball_step_k, kernels.heavy_ball_step_k_np),
    ]
    for name, call, jitted, plain in pairs:
        call(jitted)  # warm the JIT cache outside the timer
        t_jit = best_of(lambda: call(jitted), reps)
        t_np = best_of(lambda: call(plain), reps)
        rows.append((f"{name} (D={dim})", t_np, t_jit))
    return rows


def bench_fused_trace(steps: int, reps: int):
    rng = make_rng(1)
    points = rng.uniform(-1, 1, size=(25, 10))
    xi = rng.integers(0, 25, size=steps + 1)
    x0 = np.full(10, 0.8)
    g2 = np.ones(10)
    rec = np.arange(0, steps + 1, 100, dtype=np.int64)

    def call(f):
        return f(points, xi, x0, 7.7e-4, 0.0, 0.0, 0.0, 0.5, 0.0,
                 True, True, g2, False, rec)

    call(kernels.madgrad_trace)
    t_jit = best_of(lambda: call(kernels.madgrad_trace), max(3, reps // 100))
    t_np = best_of(lambda: call(kernels.madgrad_trace_np), 3)
    return [(f"fused run loop ({steps} steps)", t_np, t_jit)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=2000)
    args = parser.parse_args()

    if not NUMBA_ENABLED:
        print("numba backend is disabled (DAGRAD_NUMBA=0 or numba missing); "
              "nothing to compare")
        return 1

    rows = []
    for dim in (10, 10_000):
        rows.extend(bench_step_kernels(dim, args.reps))
    rows.extend(bench_fused_trace(10_000, args.reps))

    print(f"{'kernel':<34}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    print("-" * 67)
    for name, t_np, t_jit in rows:
        print(f"{name:<34}{t_np * 1e6:>10.2f}us{t_jit * 1e6:>10.2f}us"
              f"{t_np / t_jit:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
