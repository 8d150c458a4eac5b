"""Supervised feature screening by thresholded cross entropy.

Each feature column is scored by the best binary split of its value
range: candidate thresholds are equally spaced interior points of
[min, max], each side predicts its empirical class-1 fraction, and the
score is the sample-weighted binary cross entropy (in bits) of those
predictions.  Low cost means a discriminant feature.  The unsupervised
baseline ranks features by their channel energy instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import FittingError, ValidationError

DEFAULT_NUM_SPLITS = 31
PROB_CLAMP = 1e-12
_COST_CHUNK = 2048


def binary_entropy_bits(p):
    """Entropy of a Bernoulli(p) in bits; exact 0 at p in {0, 1}."""
    p = np.asarray(p, dtype=np.float64)
    q = 1.0 - p
    return -(p * np.log2(np.maximum(p, PROB_CLAMP))
             + q * np.log2(np.maximum(q, PROB_CLAMP)))


def split_thresholds(lo: float, hi: float, num_splits: int):
    """num_splits equally spaced interior points of [lo, hi] (endpoints excluded)."""
    return np.linspace(lo, hi, num_splits + 2)[1:-1]


def keep_count(n_features: int, keep_fraction: float) -> int:
    """Number of retained features: floor(fraction * D), at least 1."""
    if not 0 < keep_fraction <= 1:
        raise ValidationError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    return max(1, int(keep_fraction * n_features + 1e-9))


def _validate_labels(labels, n):
    lab = np.asarray(labels)
    if lab.shape != (n,):
        raise ValidationError(f"labels must have shape ({n},), got {lab.shape}")
    if not np.isin(lab, (0, 1)).all():
        raise ValidationError("labels must be binary (0/1)")
    return lab.astype(np.uint8)


def _split_costs(n_left, p_left, n, n_pos):
    """Cross-entropy cost (bits) of every candidate split from side counts."""
    n_left = n_left.astype(np.float64)
    p_left = p_left.astype(np.float64)
    n_right = n - n_left
    p_right = n_pos - p_left
    frac_left = np.where(n_left > 0, p_left / np.maximum(n_left, 1), 0.0)
    frac_right = np.where(n_right > 0, p_right / np.maximum(n_right, 1), 0.0)
    cost = (n_left / n) * binary_entropy_bits(frac_left) \
        + (n_right / n) * binary_entropy_bits(frac_right)
    return cost + 0.0                                  # normalize -0.0 to 0.0


def dft_cost(column, labels, num_splits: int = DEFAULT_NUM_SPLITS):
    """(minimum cost, best threshold) for one feature column.

    A constant column is uninformative: its cost is the entropy of the
    label prior and the "split" is the constant itself.
    """
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.shape[0] < 2:
        raise ValidationError(f"column must be 1-D with at least 2 samples, "
                              f"got shape {col.shape}")
    if not np.all(np.isfinite(col)):
        raise ValidationError("column contains non-finite values")
    if num_splits < 1:
        raise ValidationError(f"num_splits must be >= 1, got {num_splits}")
    lab = _validate_labels(labels, col.shape[0])

    costs, splits = _column_costs(col[None, :], lab, num_splits)
    return float(costs[0]), float(splits[0])


def _column_costs(matrix, labels, num_splits):
    """Per-column (cost, best split) for a (C, N) matrix of feature columns."""
    n = matrix.shape[1]
    n_pos = int(labels.sum())
    lo = matrix.min(axis=1)
    hi = matrix.max(axis=1)
    costs = np.empty(matrix.shape[0], dtype=np.float64)
    splits = np.empty(matrix.shape[0], dtype=np.float64)

    constant = lo == hi
    if constant.any():
        prior = float(binary_entropy_bits(n_pos / n))
        costs[constant] = prior
        splits[constant] = lo[constant]

    live = ~constant
    if live.any():
        cols = matrix[live]
        thresholds = np.linspace(lo[live], hi[live], num_splits + 2, axis=1)[:, 1:-1]
        tot, pos = kernels.dft_split_counts(cols, labels, thresholds)
        all_costs = _split_costs(tot, pos, n, n_pos)
        best = np.argmin(all_costs, axis=1)           # first minimum wins ties
        rows = np.arange(cols.shape[0])
        costs[live] = all_costs[rows, best]
        splits[live] = thresholds[rows, best]
    return costs, splits


@dataclass
class DftSelector:
    costs: np.ndarray            # (D,) minimal cross entropy per feature, bits
    best_splits: np.ndarray      # (D,) optimal threshold per feature
    kept_indices: np.ndarray     # sorted retained feature indices
    keep_fraction: float
    num_split_candidates: int = DEFAULT_NUM_SPLITS
    method: str = "dft"

    @property
    def n_features(self):
        return int(self.costs.shape[0])

    @property
    def n_kept(self):
        return int(self.kept_indices.shape[0])

    @property
    def n_parameters(self):
        """Budgeted numbers: the retained feature indices."""
        return self.n_kept


@dataclass
class EnergySelector:
    """Unsupervised baseline: keep the top-fraction features by channel energy."""

    energies: np.ndarray
    kept_indices: np.ndarray
    keep_fraction: float
    method: str = "energy"

    @property
    def n_features(self):
        return int(self.energies.shape[0])

    @property
    def n_kept(self):
        return int(self.kept_indices.shape[0])

    @property
    def n_parameters(self):
        return self.n_kept


def fit_dft(features, labels, keep_fraction: float,
            num_splits: int = DEFAULT_NUM_SPLITS) -> DftSelector:
    """Score every column with dft_cost and keep the lowest-cost fraction.

    Ties break toward the lower feature index; kept_indices are sorted.
    """
    mat = np.asarray(features, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2 or mat.shape[1] < 1:
        raise ValidationError(f"features must be (N >= 2, D >= 1), got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValidationError("features contain non-finite values")
    lab = _validate_labels(labels, mat.shape[0])
    if lab.min() == lab.max():
        raise FittingError("cannot fit the selector on single-class labels")
    n_keep = keep_count(mat.shape[1], keep_fraction)
    if num_splits < 1:
        raise ValidationError(f"num_splits must be >= 1, got {num_splits}")

    d = mat.shape[1]
    costs = np.empty(d, dtype=np.float64)
    splits = np.empty(d, dtype=np.float64)
    for start in range(0, d, _COST_CHUNK):
        stop = min(start + _COST_CHUNK, d)
        chunk = np.ascontiguousarray(mat[:, start:stop].T)
        costs[start:stop], splits[start:stop] = _column_costs(chunk, lab, num_splits)

    order = np.argsort(costs, kind="stable")
    kept = np.sort(order[:n_keep]).astype(np.int64)
    return DftSelector(costs=costs, best_splits=splits, kept_indices=kept,
                       keep_fraction=keep_fraction, num_split_candidates=num_splits)


def fit_energy_selector(energies, keep_fraction: float) -> EnergySelector:
    """Baseline selector keeping the top-fraction features by energy
    (ties break toward the lower index)."""
    e = np.asarray(energies, dtype=np.float64)
    if e.ndim != 1 or e.shape[0] < 1:
        raise ValidationError(f"energies must be a non-empty vector, got {e.shape}")
    if not np.all(np.isfinite(e)):
        raise ValidationError("energies contain non-finite values")
    n_keep = keep_count(e.shape[0], keep_fraction)
    order = np.argsort(-e, kind="stable")
    kept = np.sort(order[:n_keep]).astype(np.int64)
    return EnergySelector(energies=e.copy(), kept_indices=kept,
                          keep_fraction=keep_fraction)


def apply_selector(selector, features):
    """Gather the retained feature values (row or matrix) in index order."""
    arr = np.asarray(features, dtype=np.float64)
    d = selector.n_features
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise ValidationError(f"row has {arr.shape[0]} features, selector "
                                  f"expects {d}")
        return arr[selector.kept_indices]
    if arr.ndim == 2:
        if arr.shape[1] != d:
            raise ValidationError(f"matrix has {arr.shape[1]} features, selector "
                                  f"expects {d}")
        return arr[:, selector.kept_indices]
    raise ValidationError(f"features must be 1-D or 2-D, got shape {arr.shape}")


def export_cost_table(selector: DftSelector) -> str:
    """Tab-separated per-feature diagnostics for plotting the sorted-cost curve."""
    kept = set(int(i) for i in selector.kept_indices)
    lines = ["feature_index\tcost_bits\tbest_split\tkept"]
    for i in range(selector.n_features):
        lines.append(f"{i}\t{float(selector.costs[i])!r}"
                     f"\t{float(selector.best_splits[i])!r}\t{int(i in kept)}")
    return "\n".join(lines) + "\n"
