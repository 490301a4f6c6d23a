#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three likelihood kernels at several sample sizes, one full
model fit, and a small simulation-study slice, for both backends.

Run: python bench/bench_backends.py [--repeat 200] [--sizes 100,1000,10000]
"""

import argparse
import math
import time

import numpy as np

from trunccens import (
    CensoredSample,
    ModelSpec,
    OptimizerConfig,
    ScenarioGrid,
    Study,
    TruncNormParams,
    Variant,
    backend,
    fit,
    run_study,
    sample_array,
)
from trunccens.kernels import numba_impl, numpy_impl


def _make_args(n, rng):
    ylat = sample_array(TruncNormParams(1.0, 0.45, 0.0), rng.random(n))
    mask = ylat <= 0.61
    y = np.where(mask, 0.61, ylat)
    X = np.column_stack([np.ones(n), np.repeat([0.0, 1.0], n // 2)])
    gidx = np.zeros(n, dtype=np.int64)
    beta = np.array([1.0, -0.1])
    log_sigma = np.array([math.log(0.45)])
    return (y, mask, X, gidx, beta, log_sigma, 0.0, 0.61)


def _time(fn, args, repeat):
    fn(*args)  # warm up (and trigger compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<10} {'n':>7} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    for n in sizes:
        args = _make_args(n, rng)
        for name in ("loglik", "gradient", "hessian"):
            t_np = _time(getattr(numpy_impl, name), args, repeat)
            t_nb = _time(getattr(numba_impl, name), args, repeat)
            print(
                f"{name:<10} {n:>7} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
                f"{t_np / t_nb:>7.1f}x"
            )


def bench_fit(repeat):
    rng = np.random.default_rng(1)
    ylat = sample_array(TruncNormParams(1.0, 0.45, 0.0), rng.random(200))
    mask = ylat <= 0.61
    s = CensoredSample(
        y=np.where(mask, 0.61, ylat), censored=mask, X=np.ones((200, 1)), dl=0.61, left=0.0
    )
    spec = ModelSpec(Variant.CENSORED_TRUNCATED, left=0.0, dl=0.61)
    print(f"\n{'task':<22} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    times = {}
    for name in ("numpy", "numba"):
        backend.set_backend(name)
        fit(s, spec, OptimizerConfig())
        t0 = time.perf_counter()
        for _ in range(repeat):
            fit(s, spec, OptimizerConfig())
        times[name] = (time.perf_counter() - t0) / repeat
    print(
        f"{'full fit (n=200)':<22} {times['numpy'] * 1e3:>10.2f}ms "
        f"{times['numba'] * 1e3:>10.2f}ms {times['numpy'] / times['numba']:>7.1f}x"
    )

    grid = ScenarioGrid(study=Study.SINGLE_MEAN, mu=(1.0,), sigma=(0.45,), b=40, seed=3)
    for name in ("numpy", "numba"):
        backend.set_backend(name)
        run_study(grid)  # warm
        t0 = time.perf_counter()
        run_study(grid)
        times[name] = time.perf_counter() - t0
    print(
        f"{'study slice (B=40)':<22} {times['numpy']:>10.2f}s  {times['numba']:>10.2f}s  "
        f"{times['numpy'] / times['numba']:>7.1f}x"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sizes", default="100,1000,10000")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    orig = backend.active_backend()
    try:
        bench_kernels(sizes, args.repeat)
        bench_fit(max(10, args.repeat // 10))
    finally:
        backend.set_backend(orig)


if __name__ == "__main__":
    main()
