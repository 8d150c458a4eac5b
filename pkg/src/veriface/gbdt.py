"""Binary gradient-boosted trees with histogram split finding.

Trees are grown leaf-wise (best gain first) on 256-bin feature
histograms, fitting Newton steps of the logistic loss.  The default
budget caps trees at 64 leaves and the ensemble at 1000 trees; early
stopping on a stratified holdout keeps the cap an upper bound rather
than a target.  Fitting is deterministic given the config seed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, FittingError, ValidationError

_MIN_GAIN = 1e-12
_TINY_LEAF = 1e-10


@dataclass
class GbdtConfig:
    max_leaves: int = 64
    max_trees: int = 1000
    learning_rate: float = 0.1
    min_samples_leaf: int = 20
    min_child_weight: float = 1e-3
    l2_regularization: float = 0.0
    max_bins: int = 256
    early_stopping_rounds: int = 50
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.max_leaves < 2:
            raise ConfigError(f"max_leaves must be >= 2, got {self.max_leaves}")
        if self.max_trees < 1:
            raise ConfigError(f"max_trees must be >= 1, got {self.max_trees}")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.min_child_weight < 0 or self.l2_regularization < 0:
            raise ConfigError("min_child_weight and l2_regularization must be >= 0")
        if not 2 <= self.max_bins <= 256:
            raise ConfigError(f"max_bins must be in [2, 256], got {self.max_bins}")
        if self.early_stopping_rounds < 0:
            raise ConfigError("early_stopping_rounds must be >= 0")
        if not 0 <= self.validation_fraction < 0.5:
            raise ConfigError("validation_fraction must be in [0, 0.5)")


class Tree:
    """One regression tree as flat arrays; feature < 0 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self):
        return int(self.feature.shape[0])

    @property
    def n_leaves(self):
        return int((self.feature < 0).sum())

    @property
    def n_internal(self):
        return self.n_nodes - self.n_leaves

    def predict(self, X):
        """Leaf scores for (N, D) rows (vectorized tree walk)."""
        X = np.asarray(X, dtype=np.float64)
        pos = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[pos]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                break
            node = pos[active]
            go_left = X[active, feat[active]] <= self.threshold[node]
            pos[active] = np.where(go_left, self.left[node], self.right[node])
        return self.value[pos]

    @classmethod
    def from_nested(cls, spec):
        """Build a tree from nested tuples, for hand-constructed models.

        spec is ("leaf", value) or ("split", feature, threshold, left, right).
        """
        feature, threshold, left, right, value = [], [], [], [], []

        def build(node):
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if node[0] == "leaf":
                value[i] = float(node[1])
            elif node[0] == "split":
                feature[i] = int(node[1])
                threshold[i] = float(node[2])
                left[i] = build(node[3])
                right[i] = build(node[4])
            else:
                raise ValidationError(f"unknown tree node kind {node[0]!r}")
            return i

        build(spec)
        return cls(feature, threshold, left, right, value)


@dataclass
class GbdtModel:
    trees: list
    learning_rate: float
    base_score: float
    config: GbdtConfig
    n_features: int
    train_loss_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_trees(self):
        return len(self.trees)

    def raw_scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(f"rows must have {self.n_features} features, "
                                  f"got shape {X.shape}")
        out = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def predict_proba_matrix(self, X):
        return _sigmoid(self.raw_scores(X))


def _sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _logloss(y, raw):
    p = np.clip(_sigmoid(raw), 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _make_bins(X, max_bins):
    """Pre-bin features; returns (feature-major uint8 bins, edges list, edge mask).

    Bin b of feature f holds the values x with edges[b-1] < x <= edges[b],
    so the split "bin <= b" is exactly "x <= edges[b]".
    """
    n, d = X.shape
    binned = np.empty((d, n), dtype=np.uint8)
    edges_list = []
    for f in range(d):
        col = X[:, f]
        uniq = np.unique(col)
        if uniq.size <= 1:
            edges = np.empty(0, dtype=np.float64)
        elif uniq.size <= max_bins:
            edges = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
            edges = np.unique(qs)
        if edges.size > 255:
            edges = edges[:255]
        binned[f] = np.searchsorted(edges, col, side="left").astype(np.uint8)
        edges_list.append(edges)
    n_edges = np.array([e.size for e in edges_list], dtype=np.int64)
    return binned, edges_list, n_edges


def _node_best_split(binned, idx, grad, hess, cfg, n_edges, sum_g, sum_h, buffers):
    """Best (gain, feature, bin) for one node, or None if no valid split."""
    hist_g, hist_h, hist_c = kernels.gbdt_histograms(binned, idx, grad, hess,
                                                     out=buffers)
    gain, f, b = kernels.best_split_scan(
        hist_g, hist_h, hist_c, n_edges, sum_g, sum_h, idx.size,
        cfg.min_samples_leaf, cfg.min_child_weight, cfg.l2_regularization)
    if f < 0 or gain <= _MIN_GAIN:
        return None
    return gain, f, b


def _leaf_value(sum_g, sum_h, lam):
    denom = sum_h + lam
    if denom <= 1e-12:
        return 0.0
    return -sum_g / denom


def _grow_tree(binned, edges, n_edges, root_idx, grad, hess, cfg, buffers):
    """Grow one tree leaf-wise; returns (Tree, [(leaf sample idx, value), ...])."""
    nodes = []

    def make(idx):
        node = {
            "id": len(nodes), "idx": idx,
            "sum_g": float(grad[idx].sum()), "sum_h": float(hess[idx].sum()),
            "feature": -1, "bin": -1, "left": -1, "right": -1, "split": None,
        }
        nodes.append(node)
        if idx.size >= 2 * cfg.min_samples_leaf:
            node["split"] = _node_best_split(binned, idx, grad, hess, cfg,
                                             n_edges, node["sum_g"],
                                             node["sum_h"], buffers)
        return node

    root = make(root_idx)
    heap = []
    counter = 0
    if root["split"] is not None:
        heapq.heappush(heap, (-root["split"][0], counter, root["id"]))
        counter += 1
    n_leaves = 1
    while heap and n_leaves < cfg.max_leaves:
        _, _, nid = heapq.heappop(heap)
        node = nodes[nid]
        gain, f, b = node["split"]
        idx = node["idx"]
        go_left = binned[f, idx] <= b
        left = make(idx[go_left])
        right = make(idx[~go_left])
        node.update(feature=f, bin=b, left=left["id"], right=right["id"], idx=None)
        n_leaves += 1
        for child in (left, right):
            if child["split"] is not None:
                heapq.heappush(heap, (-child["split"][0], counter, child["id"]))
                counter += 1

    n = len(nodes)
    feature = np.full(n, -1, dtype=np.int32)
    threshold = np.zeros(n, dtype=np.float64)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    value = np.zeros(n, dtype=np.float64)
    leaves = []
    for node in nodes:
        i = node["id"]
        if node["feature"] >= 0:
            feature[i] = node["feature"]
            threshold[i] = edges[node["feature"]][node["bin"]]
            left[i] = node["left"]
            right[i] = node["right"]
        else:
            value[i] = _leaf_value(node["sum_g"], node["sum_h"], cfg.l2_regularization)
            leaves.append((node["idx"], value[i]))
    return Tree(feature, threshold, left, right, value), leaves


def _holdout_split(y, cfg):
    """Stratified holdout indices for early stopping, or None when infeasible."""
    if cfg.early_stopping_rounds <= 0 or cfg.validation_fraction <= 0:
        return None
    rng = np.random.default_rng(cfg.seed)
    pieces = []
    for cls in (0, 1):
        cls_idx = np.nonzero(y == cls)[0]
        n_val = int(round(cfg.validation_fraction * cls_idx.size))
        if n_val < 1 or cls_idx.size - n_val < 1:
            return None
        pieces.append(rng.permutation(cls_idx)[:n_val])
    return np.sort(np.concatenate(pieces))


def fit_gbdt(features, labels, config: GbdtConfig | None = None) -> GbdtModel:
    """Fit the boosted ensemble; deterministic given the config seed."""
    cfg = config if config is not None else GbdtConfig()
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValidationError(f"features must be (N >= 2, D >= 1), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain NaN or infinite values")
    y = np.asarray(labels)
    if y.shape != (X.shape[0],) or not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be binary (0/1) and match the rows")
    y = y.astype(np.float64)
    if y.min() == y.max():
        raise FittingError("cannot fit the classifier on single-class labels")

    val_idx = _holdout_split(y, cfg)
    if val_idx is None:
        train_idx = np.arange(X.shape[0])
    else:
        mask = np.ones(X.shape[0], dtype=bool)
        mask[val_idx] = False
        train_idx = np.nonzero(mask)[0]
        if y[train_idx].min() == y[train_idx].max():
            val_idx = None
            train_idx = np.arange(X.shape[0])

    Xt, yt = X[train_idx], y[train_idx]
    binned, edges, n_edges = _make_bins(Xt, cfg.max_bins)
    buffers = (np.empty((X.shape[1], 256), dtype=np.float64),
               np.empty((X.shape[1], 256), dtype=np.float64),
               np.empty((X.shape[1], 256), dtype=np.int64))

    prior = float(np.clip(yt.mean(), 1e-6, 1.0 - 1e-6))
    base_score = float(np.log(prior / (1.0 - prior)))
    raw_t = np.full(Xt.shape[0], base_score)
    losses = [_logloss(yt, raw_t)]

    if val_idx is not None:
        Xv, yv = X[val_idx], y[val_idx]
        raw_v = np.full(Xv.shape[0], base_score)
        best_val = _logloss(yv, raw_v)
        best_round = -1

    all_idx = np.arange(Xt.shape[0], dtype=np.int64)
    trees = []
    for rnd in range(cfg.max_trees):
        prob = _sigmoid(raw_t)
        grad = prob - yt
        hess = prob * (1.0 - prob)
        tree, leaves = _grow_tree(binned, edges, n_edges, all_idx, grad, hess,
                                  cfg, buffers)
        if tree.n_leaves == 1 and abs(tree.value[0]) < _TINY_LEAF:
            break
        trees.append(tree)
        for idx, val in leaves:
            raw_t[idx] += cfg.learning_rate * val
        losses.append(_logloss(yt, raw_t))
        if val_idx is not None:
            raw_v += cfg.learning_rate * tree.predict(Xv)
            val_loss = _logloss(yv, raw_v)
            if val_loss < best_val:
                best_val = val_loss
                best_round = rnd
            elif rnd - best_round >= cfg.early_stopping_rounds:
                break

    if val_idx is not None and trees:
        keep = max(best_round + 1, 1)
        trees = trees[:keep]
        losses = losses[:keep + 1]

    return GbdtModel(trees=trees, learning_rate=cfg.learning_rate,
                     base_score=base_score, config=cfg, n_features=X.shape[1],
                     train_loss_curve=np.array(losses))


def predict_proba(model: GbdtModel, row) -> float:
    """Probability of class 1 for a single feature row."""
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != model.n_features:
        raise ValidationError(f"row must have {model.n_features} features, "
                              f"got shape {arr.shape}")
    return float(model.predict_proba_matrix(arr[None])[0])


def count_parameters(model: GbdtModel) -> int:
    """Stored numbers in the ensemble: 2 per internal node plus 1 per leaf."""
    return int(sum(2 * t.n_internal + t.n_leaves for t in model.trees))
