import numpy as np
import pytest

from veriface.errors import ConfigError, FittingError, ValidationError
from veriface.gbdt import (GbdtConfig, GbdtModel, Tree, count_parameters,
                           fit_gbdt, predict_proba, _sigmoid)


def full_tree(depth, value=0.5):
    """Perfect binary tree with 2**depth leaves (nested-tuple construction)."""
    def node(d):
        if d == 0:
            return ("leaf", value)
        return ("split", 0, 0.0, node(d - 1), node(d - 1))
    return Tree.from_nested(node(depth))


def walk_oracle(tree, row):
    """Independent recursive tree walk used to cross-check predict()."""
    i = 0
    while tree.feature[i] >= 0:
        if row[tree.feature[i]] <= tree.threshold[i]:
            i = tree.left[i]
        else:
            i = tree.right[i]
    return tree.value[i]


class TestParameterCounting:
    def test_full_64_leaf_tree_is_190(self):
        tree = full_tree(6)
        assert tree.n_leaves == 64
        assert tree.n_internal == 63
        model = GbdtModel(trees=[tree], learning_rate=0.1, base_score=0.0,
                          config=GbdtConfig(), n_features=1)
        assert count_parameters(model) == 190

    def test_thousand_full_trees(self):
        trees = [full_tree(6) for _ in range(1000)]
        model = GbdtModel(trees=trees, learning_rate=0.1, base_score=0.0,
                          config=GbdtConfig(), n_features=1)
        assert count_parameters(model) == 190_000

    def test_empty_ensemble_counts_zero(self):
        model = GbdtModel(trees=[], learning_rate=0.1, base_score=0.3,
                          config=GbdtConfig(), n_features=2)
        assert count_parameters(model) == 0

    def test_leaf_internal_invariant(self):
        for depth in range(1, 7):
            tree = full_tree(depth)
            assert tree.n_internal == tree.n_leaves - 1


class TestPredict:
    def test_empty_ensemble_returns_prior(self):
        model = GbdtModel(trees=[], learning_rate=0.1, base_score=0.8,
                          config=GbdtConfig(), n_features=3)
        p = predict_proba(model, np.zeros(3))
        assert np.isclose(p, 1.0 / (1.0 + np.exp(-0.8)), rtol=1e-12)

    def test_saturating_leaf(self):
        tree = Tree.from_nested(("leaf", 1e6))
        model = GbdtModel(trees=[tree], learning_rate=1.0, base_score=0.0,
                          config=GbdtConfig(), n_features=1)
        assert predict_proba(model, np.zeros(1)) == pytest.approx(1.0, abs=1e-12)

    def test_hand_built_three_tree_forward_pass(self):
        t1 = Tree.from_nested(("split", 0, 0.5, ("leaf", -1.0), ("leaf", 2.0)))
        t2 = Tree.from_nested(("split", 1, -1.0, ("leaf", 0.25),
                               ("split", 0, 2.0, ("leaf", -0.5), ("leaf", 1.5))))
        t3 = Tree.from_nested(("leaf", 0.1))
        model = GbdtModel(trees=[t1, t2, t3], learning_rate=0.3, base_score=-0.2,
                          config=GbdtConfig(), n_features=2)
        row = np.array([1.0, 0.0])          # t1 -> 2.0, t2 -> -0.5, t3 -> 0.1
        raw = -0.2 + 0.3 * (2.0 - 0.5 + 0.1)
        assert predict_proba(model, row) == pytest.approx(
            1.0 / (1.0 + np.exp(-raw)), rel=1e-12)

    def test_predict_matches_walk_oracle(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 6))
        y = (X[:, 0] + 0.5 * X[:, 3] > 0).astype(int)
        model = fit_gbdt(X, y, GbdtConfig(max_trees=12, min_samples_leaf=5,
                                          early_stopping_rounds=0, seed=1))
        probe = rng.normal(size=(50, 6))
        scores = model.raw_scores(probe)
        for i in range(50):
            expect = model.base_score + model.learning_rate * sum(
                walk_oracle(tree, probe[i]) for tree in model.trees)
            assert np.isclose(scores[i], expect, rtol=1e-12)

    def test_row_length_mismatch(self):
        model = GbdtModel(trees=[], learning_rate=0.1, base_score=0.0,
                          config=GbdtConfig(), n_features=4)
        with pytest.raises(ValidationError):
            predict_proba(model, np.zeros(5))


class TestFit:
    def test_separable_1d_perfect_auc_within_ten_trees(self):
        rng = np.random.default_rng(2)
        x = np.concatenate([rng.uniform(0, 1, 40), rng.uniform(2, 3, 40)])
        y = np.repeat([0, 1], 40)
        model = fit_gbdt(x[:, None], y, GbdtConfig(
            max_trees=10, min_samples_leaf=1, early_stopping_rounds=0, seed=0))
        assert model.n_trees <= 10
        p = model.predict_proba_matrix(x[:, None])
        assert np.all(p[y == 1][:, None] > p[y == 0][None, :])   # AUC = 1.0

    def test_xor_pattern_is_learnable(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(-1, 1, size=(600, 2))
        y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
        model = fit_gbdt(X, y, GbdtConfig(max_trees=60, min_samples_leaf=5,
                                          early_stopping_rounds=0, seed=0))
        p = model.predict_proba_matrix(X)
        correct = ((p > 0.5).astype(int) == y).mean()
        assert correct > 0.99

    def test_training_loss_non_increasing(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(300, 10))
        y = (X[:, 0] + rng.normal(scale=1.0, size=300) > 0).astype(int)
        y[:2] = (0, 1)
        model = fit_gbdt(X, y, GbdtConfig(max_trees=40, min_samples_leaf=5,
                                          early_stopping_rounds=0, seed=0))
        curve = model.train_loss_curve
        assert curve.shape[0] == model.n_trees + 1
        assert np.all(np.diff(curve) <= 1e-12)

    def test_tree_and_leaf_caps_respected(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(400, 5))
        y = (X[:, 0] > 0).astype(int)
        cfg = GbdtConfig(max_trees=7, max_leaves=8, min_samples_leaf=2,
                         early_stopping_rounds=0, seed=0)
        model = fit_gbdt(X, y, cfg)
        assert model.n_trees <= 7
        assert all(t.n_leaves <= 8 for t in model.trees)
        assert count_parameters(model) <= (2 * 7 + 8) * 7

    def test_default_config_budget_bound(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(200, 4))
        y = (X[:, 1] > 0.2).astype(int)
        y[:2] = (0, 1)
        model = fit_gbdt(X, y, GbdtConfig(max_trees=30, seed=0))
        assert all(t.n_leaves <= 64 for t in model.trees)
        assert count_parameters(model) <= 190 * 1000

    def test_determinism_same_seed_same_model(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(250, 8))
        y = (X[:, 2] - X[:, 5] > 0).astype(int)
        y[:2] = (0, 1)
        cfg = GbdtConfig(max_trees=25, min_samples_leaf=4, seed=9)
        m1 = fit_gbdt(X, y, cfg)
        m2 = fit_gbdt(X, y, cfg)
        assert m1.n_trees == m2.n_trees
        assert m1.base_score == m2.base_score
        assert np.array_equal(m1.train_loss_curve, m2.train_loss_curve)
        for t1, t2 in zip(m1.trees, m2.trees):
            for part in ("feature", "threshold", "left", "right", "value"):
                assert np.array_equal(getattr(t1, part), getattr(t2, part))

    def test_early_stopping_trims_trees(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(500, 3))
        y = rng.integers(0, 2, size=500)          # pure noise labels
        y[:2] = (0, 1)
        model = fit_gbdt(X, y, GbdtConfig(max_trees=200, min_samples_leaf=5,
                                          early_stopping_rounds=5,
                                          validation_fraction=0.2, seed=0))
        assert model.n_trees < 200

    def test_single_class_rejected(self):
        with pytest.raises(FittingError, match="single-class"):
            fit_gbdt(np.zeros((10, 2)), np.zeros(10, dtype=int))

    def test_nan_features_rejected(self):
        X = np.zeros((10, 2))
        X[3, 1] = np.nan
        with pytest.raises(ValidationError, match="NaN"):
            fit_gbdt(X, np.array([0, 1] * 5))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            GbdtConfig(max_leaves=1)
        with pytest.raises(ConfigError):
            GbdtConfig(learning_rate=0.0)
        with pytest.raises(ConfigError):
            GbdtConfig(max_bins=300)


def test_sigmoid_stable_at_extremes():
    assert _sigmoid(np.array([800.0]))[0] == 1.0
    assert _sigmoid(np.array([-800.0]))[0] == 0.0
    assert _sigmoid(np.array([0.0]))[0] == 0.5
