# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: GBDT histogram accumulation and DFT split counting.

Both functions fill caller-allocated output arrays so that the numpy
fallback in _kernels_py.py can share the exact same signatures.
"""

import numpy as np


def gbdt_histograms(const unsigned char[:, ::1] binned,
                    const long long[::1] idx,
                    const double[::1] grad,
                    const double[::1] hess,
                    double[:, ::1] out_grad,
                    double[:, ::1] out_hess,
                    long long[:, ::1] out_count):
    """Accumulate per-feature gradient / hessian / count histograms.

    binned is feature-major (n_features, n_samples) with bin ids < 256;
    idx holds the sample ids sitting in the current tree node.  Output
    rows are fully overwritten, so buffers can be reused across nodes.
    """
    cdef Py_ssize_t n_features = binned.shape[0]
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t f, i
    cdef long long s
    cdef unsigned char b
    for f in range(n_features):
        for i in range(256):
            out_grad[f, i] = 0.0
            out_hess[f, i] = 0.0
            out_count[f, i] = 0
        for i in range(n):
            s = idx[i]
            b = binned[f, s]
            out_grad[f, b] += grad[s]
            out_hess[f, b] += hess[s]
            out_count[f, b] += 1


def best_split_scan(const double[:, ::1] hist_grad,
                    const double[:, ::1] hist_hess,
                    const long long[:, ::1] hist_count,
                    const long long[::1] n_edges,
                    double sum_g, double sum_h, long long n_samples,
                    long long min_samples_leaf, double min_child_weight,
                    double lam):
    """Best (gain, feature, bin) over all valid histogram splits.

    Gains follow the Newton objective gl^2/(hl+lam) + gr^2/(hr+lam) minus
    the parent term; ties resolve to the lowest (feature, bin).  Returns
    (-inf, -1, -1) when no split satisfies the leaf constraints.
    """
    cdef Py_ssize_t d = hist_grad.shape[0]
    cdef Py_ssize_t f, b, limit
    cdef double gl, hl, gr, hr, gain, best_gain, parent
    cdef long long cl, cr
    cdef Py_ssize_t best_f = -1, best_b = -1

    parent = 0.0
    if sum_h + lam > 0.0:
        parent = sum_g * sum_g / (sum_h + lam)
    best_gain = -float("inf")

    for f in range(d):
        limit = n_edges[f]
        if limit > 255:
            limit = 255
        gl = 0.0
        hl = 0.0
        cl = 0
        for b in range(limit):
            gl = gl + hist_grad[f, b]
            hl = hl + hist_hess[f, b]
            cl = cl + hist_count[f, b]
            cr = n_samples - cl
            if cr < min_samples_leaf:
                break                      # cl only grows, so cr never recovers
            if cl < min_samples_leaf:
                continue
            hr = sum_h - hl
            if hl < min_child_weight or hr < min_child_weight:
                continue
            if hl + lam <= 0.0 or hr + lam <= 0.0:
                continue
            gr = sum_g - gl
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_b = b
    return best_gain, best_f, best_b


def dft_split_counts(const double[:, ::1] columns,
                     const unsigned char[::1] labels,
                     const double[:, ::1] thresholds,
                     long long[:, ::1] out_total,
                     long long[:, ::1] out_positive):
    """Count samples at or below each candidate split threshold.

    columns is (n_columns, n_samples); thresholds is (n_columns, n_splits)
    with each row sorted ascending.  After the call,
    out_total[c, j]    = #{i : columns[c, i] <= thresholds[c, j]}
    out_positive[c, j] = the same count restricted to label-1 samples.

    Each sample is placed once into the segment between consecutive
    thresholds (binary search), then prefix sums give every per-threshold
    count; the result is identical to direct <= comparisons.
    """
    cdef Py_ssize_t n_cols = columns.shape[0]
    cdef Py_ssize_t n = columns.shape[1]
    cdef Py_ssize_t n_splits = thresholds.shape[1]
    cdef Py_ssize_t c, i, j, lo, hi, mid
    cdef double x
    cdef long long cum_n, cum_p

    seg_n_arr = np.zeros(n_splits + 1, dtype=np.int64)
    seg_p_arr = np.zeros(n_splits + 1, dtype=np.int64)
    cdef long long[::1] seg_n = seg_n_arr
    cdef long long[::1] seg_p = seg_p_arr

    for c in range(n_cols):
        for j in range(n_splits + 1):
            seg_n[j] = 0
            seg_p[j] = 0
        for i in range(n):
            x = columns[c, i]
            # lo ends as the number of thresholds strictly below x
            lo = 0
            hi = n_splits
            while lo < hi:
                mid = (lo + hi) >> 1
                if thresholds[c, mid] < x:
                    lo = mid + 1
                else:
                    hi = mid
            seg_n[lo] += 1
            seg_p[lo] += labels[i]
        cum_n = 0
        cum_p = 0
        for j in range(n_splits):
            cum_n += seg_n[j]
            cum_p += seg_p[j]
            out_total[c, j] = cum_n
            out_positive[c, j] = cum_p
