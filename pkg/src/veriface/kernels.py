"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

The two backends implement identical contracts; integer counts agree
bit-exactly and float accumulations agree to rounding order.  Tests and
benchmarks may force a backend with set_backend().
"""

import numpy as np

from . import _kernels_py

try:
    from . import _speedups
    HAVE_COMPILED = True
except ImportError:
    _speedups = None
    HAVE_COMPILED = False

_backend = _speedups if HAVE_COMPILED else _kernels_py


def backend_name():
    return "compiled" if _backend is _speedups else "numpy"


def set_backend(name):
    """Force "compiled" or "numpy"; raises if the compiled kernels are absent."""
    global _backend
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels are not available in this install")
        _backend = _speedups
    elif name == "numpy":
        _backend = _kernels_py
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def gbdt_histograms(binned, idx, grad, hess, out=None):
    """Per-feature (grad, hess, count) histograms over the samples in idx.

    binned: (n_features, n_samples) uint8, feature-major.  Returns float64
    (n_features, 256) grad/hess sums and int64 counts.  Pass out=(g, h, c)
    to reuse buffers across calls; they are fully overwritten.
    """
    binned = np.ascontiguousarray(binned, dtype=np.uint8)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    hess = np.ascontiguousarray(hess, dtype=np.float64)
    n_features = binned.shape[0]
    if out is None:
        out_grad = np.empty((n_features, 256), dtype=np.float64)
        out_hess = np.empty((n_features, 256), dtype=np.float64)
        out_count = np.empty((n_features, 256), dtype=np.int64)
    else:
        out_grad, out_hess, out_count = out
    _backend.gbdt_histograms(binned, idx, grad, hess, out_grad, out_hess, out_count)
    return out_grad, out_hess, out_count


def best_split_scan(hist_grad, hist_hess, hist_count, n_edges, sum_g, sum_h,
                    n_samples, min_samples_leaf, min_child_weight, lam):
    """Best (gain, feature, bin) over valid histogram splits; feature is -1
    when no split satisfies the leaf constraints."""
    gain, feature, split_bin = _backend.best_split_scan(
        hist_grad, hist_hess, hist_count,
        np.ascontiguousarray(n_edges, dtype=np.int64),
        float(sum_g), float(sum_h), int(n_samples),
        int(min_samples_leaf), float(min_child_weight), float(lam))
    return float(gain), int(feature), int(split_bin)


def dft_split_counts(columns, labels, thresholds):
    """Counts of samples (total, positive) at or below each threshold.

    columns: (n_columns, n_samples); thresholds: (n_columns, n_splits),
    ascending per row.  Returns two int64 (n_columns, n_splits) arrays.
    """
    columns = np.ascontiguousarray(columns, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    n_cols, n_splits = thresholds.shape
    out_total = np.zeros((n_cols, n_splits), dtype=np.int64)
    out_positive = np.zeros((n_cols, n_splits), dtype=np.int64)
    _backend.dft_split_counts(columns, labels, thresholds, out_total, out_positive)
    return out_total, out_positive
