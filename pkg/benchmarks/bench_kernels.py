#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

The hot loops are the GBDT histogram build, the best-split scan over the
histograms, and the split-threshold counting used by the feature screen.
Sizes mirror the synthetic benchmark (about 1.4K training rows and 5.7K
features).  A small GBDT fit compares the end-to-end effect.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from veriface import kernels
from veriface.gbdt import GbdtConfig, fit_gbdt


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def bench_case(name, make_fn, repeats):
    rows = {}
    backends = ["numpy"] + (["compiled"] if kernels.HAVE_COMPILED else [])
    for backend in backends:
        kernels.set_backend(backend)
        fn = make_fn()
        rows[backend] = _time(fn, repeats)
    speed = ""
    if "compiled" in rows:
        speed = f"  x{rows['numpy'] / rows['compiled']:.1f} speedup"
    parts = "  ".join(f"{k}: {v * 1e3:9.2f} ms" for k, v in rows.items())
    print(f"{name:<28}{parts}{speed}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller sizes, fewer repeats")
    args = parser.parse_args()

    scale = 4 if args.quick else 1
    n = 1400 // scale
    d = 5600 // scale
    repeats = 3

    print(f"backends available: numpy"
          f"{' + compiled' if kernels.HAVE_COMPILED else ' only'}")
    print(f"sizes: n_samples={n}, n_features={d}\n")

    rng = np.random.default_rng(0)
    binned = rng.integers(0, 256, size=(d, n)).astype(np.uint8)
    idx = np.arange(n, dtype=np.int64)
    small_idx = np.sort(rng.choice(n, size=max(2, n // 16), replace=False)) \
        .astype(np.int64)
    grad = rng.normal(size=n)
    hess = rng.uniform(0.01, 1.0, size=n)
    buffers = (np.empty((d, 256)), np.empty((d, 256)),
               np.empty((d, 256), dtype=np.int64))

    bench_case("histograms (root node)",
               lambda: lambda: kernels.gbdt_histograms(binned, idx, grad, hess,
                                                       out=buffers),
               repeats)
    bench_case("histograms (small node)",
               lambda: lambda: kernels.gbdt_histograms(binned, small_idx, grad,
                                                       hess, out=buffers),
               repeats)

    hist = kernels.gbdt_histograms(binned, idx, grad, hess)
    n_edges = np.full(d, 255, dtype=np.int64)
    bench_case("best-split scan",
               lambda: lambda: kernels.best_split_scan(
                   *hist, n_edges, float(grad.sum()), float(hess.sum()), n,
                   20, 1e-3, 0.0),
               repeats)

    cols = rng.normal(size=(d // 4, n))
    labels = rng.integers(0, 2, size=n).astype(np.uint8)
    thresholds = np.linspace(cols.min(axis=1), cols.max(axis=1), 33,
                             axis=1)[:, 1:-1]
    bench_case("dft split counts",
               lambda: lambda: kernels.dft_split_counts(cols, labels,
                                                        thresholds),
               repeats)

    X = rng.normal(size=(n, d // 8))
    y = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(int)
    cfg = GbdtConfig(max_trees=10, min_samples_leaf=20,
                     early_stopping_rounds=0, seed=0)
    bench_case("gbdt fit (10 trees)",
               lambda: lambda: fit_gbdt(X, y, cfg),
               1)

    if kernels.HAVE_COMPILED:
        kernels.set_backend("compiled")


if __name__ == "__main__":
    main()
