"""Local learners: gradient checks, exhaustive split oracles, boosting."""

import json

import numpy as np
import pytest

from conftest import make_blobs
from fedspike.dataset import LabeledMatrix
from fedspike.learners import (DEFAULTS, KINDS, LearnerConfig, TrainingError,
                               learning_curve, train_learner)
from fedspike.learners.forest import train_forest
from fedspike.learners.gbt import train_gbt
from fedspike.learners.logreg import (logreg_loss_and_grads, softmax,
                                      train_logreg)
from fedspike.learners.selection import SelectionError, select_features
from fedspike.learners.serialize import model_from_json, model_to_json
from fedspike.learners.tree import (best_gini_split, fit_regression_tree,
                                    regression_tree_predict, train_tree)

# three intervals on one feature: a single stump cannot reach 100%
BAND_X = np.arange(12, dtype=np.float64).reshape(-1, 1)
BAND_Y = np.array([0] * 4 + [1] * 4 + [0] * 4)
BAND = LabeledMatrix(BAND_X, BAND_Y, 2, ("edge", "middle"))


def brute_force_gini_split(x, y, n_classes):
    """Exhaustive oracle over every feature and every midpoint threshold."""
    def gini(labels):
        if labels.size == 0:
            return 0.0
        p = np.bincount(labels, minlength=n_classes) / labels.size
        return 1.0 - (p ** 2).sum()

    n = y.size
    parent = gini(y)
    best = None
    best_gain = 1e-12
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2
            mask = x[:, j] <= thr
            gain = parent - (mask.sum() * gini(y[mask])
                             + (~mask).sum() * gini(y[~mask])) / n
            if gain > best_gain:
                best_gain = gain
                best = (j, thr, gain)
    return best


class TestConfig:
    def test_defaults_resolved_per_kind(self):
        cfg = LearnerConfig(kind="logreg")
        assert cfg.resolved("learning_rate") == DEFAULTS["logreg"]["learning_rate"]
        assert cfg.resolved("epochs") == 300
        assert LearnerConfig(kind="gbt").resolved("n_trees") == 100

    def test_explicit_value_wins(self):
        cfg = LearnerConfig(kind="logreg", learning_rate=0.5)
        assert cfg.resolved("learning_rate") == 0.5

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            LearnerConfig(kind="svm")

    def test_round_trip_dict(self):
        cfg = LearnerConfig(kind="forest", n_trees=7, seed=3)
        assert LearnerConfig.from_dict(cfg.to_dict()) == cfg

    def test_nan_features_rejected(self):
        bad = LabeledMatrix(np.array([[1.0, np.nan]]), np.array([0]),
                            1, ("a",))
        with pytest.raises(TrainingError, match="NaN"):
            train_learner(bad, LearnerConfig(kind="logreg"))


class TestLogreg:
    def test_separable_data_fits_perfectly(self):
        data = make_blobs(30, [[0, 0], [6, 6], [0, 6]], scale=0.3, seed=0)
        model = train_logreg(data, LearnerConfig(kind="logreg"))
        assert (model.predict(data.x) == data.y).mean() == 1.0

    def test_proba_rows_sum_to_one(self):
        data = make_blobs(10, [[0, 0], [3, 3]], scale=1.0, seed=1)
        model = train_logreg(data, LearnerConfig(kind="logreg"))
        proba = model.predict_proba(data.x)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert np.all(proba >= 0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, d, c = 6, 3, 3
            x = rng.normal(size=(n, d))
            y = rng.integers(0, c, n)
            onehot = np.zeros((n, c))
            onehot[np.arange(n), y] = 1.0
            w = rng.normal(size=(d, c)) * 0.5
            b = rng.normal(size=c) * 0.5
            l2 = 0.01
            _, gw, gb = logreg_loss_and_grads(w, b, x, onehot, l2)
            eps = 1e-6
            for arr, grad in ((w, gw), (b, gb)):
                it = np.nditer(arr, flags=["multi_index"])
                for _v in it:
                    i = it.multi_index
                    orig = arr[i]
                    arr[i] = orig + eps
                    lp, _, _ = logreg_loss_and_grads(w, b, x, onehot, l2)
                    arr[i] = orig - eps
                    lm, _, _ = logreg_loss_and_grads(w, b, x, onehot, l2)
                    arr[i] = orig
                    fd = (lp - lm) / (2 * eps)
                    denom = max(abs(fd), abs(grad[i]), 1e-8)
                    assert abs(fd - grad[i]) / denom < 1e-5

    def test_single_class_warns(self):
        data = LabeledMatrix(np.eye(3), np.zeros(3, dtype=np.int64), 1, ("a",))
        with pytest.warns(UserWarning, match="single class"):
            train_logreg(data, LearnerConfig(kind="logreg", epochs=2))

    def test_softmax_is_shift_invariant(self):
        z = np.array([[1.0, 2.0, 3.0]])
        assert np.allclose(softmax(z), softmax(z + 100.0))


class TestTree:
    def test_split_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            x = rng.normal(size=(25, 4))
            y = rng.integers(0, 3, 25)
            got = best_gini_split(x, y, 3, np.arange(4))
            want = brute_force_gini_split(x, y, 3)
            if want is None:
                assert got is None
                continue
            assert got[0] == want[0]
            assert got[1] == pytest.approx(want[1])
            assert got[2] == pytest.approx(want[2])

    def test_threshold_is_midpoint_and_left_is_leq(self):
        x = np.array([[1.0], [3.0]])
        y = np.array([0, 1])
        feature, threshold, _ = best_gini_split(x, y, 2, [0])
        assert (feature, threshold) == (0, 2.0)
        model = train_tree(LabeledMatrix(x, y, 2, ("a", "b")),
                           LearnerConfig(kind="tree"))
        # the boundary value itself goes left
        assert model.predict(np.array([[2.0]]))[0] == 0

    def test_banded_labels_need_depth_two(self):
        shallow = train_tree(BAND, LearnerConfig(kind="tree", max_depth=1))
        deep = train_tree(BAND, LearnerConfig(kind="tree", max_depth=2))
        assert (shallow.predict(BAND.x) == BAND.y).mean() < 1.0
        assert (deep.predict(BAND.x) == BAND.y).mean() == 1.0

    def test_pure_node_is_leaf(self):
        data = LabeledMatrix(np.arange(10.0).reshape(-1, 1),
                             np.zeros(10, dtype=np.int64), 1, ("a",))
        model = train_tree(data, LearnerConfig(kind="tree"))
        assert model.root.is_leaf

    def test_importances_sum_to_one(self):
        data = make_blobs(20, [[0, 0, 0], [4, 0, 0]], scale=0.5, seed=4)
        model = train_tree(data, LearnerConfig(kind="tree"))
        imp = model.feature_importances()
        assert imp.sum() == pytest.approx(1.0)
        assert imp.argmax() == 0     # only the first feature separates


class TestForest:
    def test_degenerate_forest_equals_single_tree(self):
        data = make_blobs(20, [[0, 0], [4, 4], [0, 4]], scale=0.8, seed=5)
        cfg = LearnerConfig(kind="forest", n_trees=1, seed=1)
        forest = train_forest(data, cfg, bootstrap=False)
        tree = train_tree(data, LearnerConfig(kind="tree", seed=1))
        assert np.array_equal(forest.predict_proba(data.x),
                              tree.predict_proba(data.x))

    def test_oob_accuracy_tracks_holdout_accuracy(self):
        data = make_blobs(60, [[0, 0], [3, 3]], scale=1.0, seed=6)
        holdout = make_blobs(60, [[0, 0], [3, 3]], scale=1.0, seed=66)
        forest = train_forest(data, LearnerConfig(kind="forest", seed=2))
        test_acc = (forest.predict(holdout.x) == holdout.y).mean()
        assert forest.oob_accuracy is not None
        assert abs(forest.oob_accuracy - test_acc) < 0.15

    def test_same_seed_reproducible(self):
        data = make_blobs(25, [[0, 0], [3, 3]], scale=1.0, seed=7)
        cfg = LearnerConfig(kind="forest", n_trees=10, seed=9)
        a = train_forest(data, cfg)
        b = train_forest(data, cfg)
        assert np.array_equal(a.predict_proba(data.x),
                              b.predict_proba(data.x))


class TestGbt:
    def test_zero_rounds_predicts_class_priors(self):
        data = make_blobs(10, [[0, 0], [3, 3]], scale=1.0, seed=8)
        data = LabeledMatrix(data.x, np.array([0] * 15 + [1] * 5),
                             2, data.label_vocab)
        model = train_gbt(data, LearnerConfig(kind="gbt", n_trees=0))
        proba = model.predict_proba(data.x[:3])
        assert np.allclose(proba, [0.75, 0.25])

    def test_loss_trace_decreases(self):
        data = make_blobs(25, [[0, 0], [4, 4], [0, 4]], scale=0.8, seed=9)
        model = train_gbt(data, LearnerConfig(kind="gbt", n_trees=20))
        trace = model.loss_trace
        assert len(trace) == 21          # prior-only loss + one per round
        assert trace[-1] < trace[0]
        # Newton steps on a well-posed problem should never blow up
        assert max(trace) == trace[0]

    def test_stump_leaf_values_match_newton_formula(self):
        # single feature, perfectly split: leaf = -lr * G / (H + l2)
        x = np.array([[0.0], [0.0], [1.0], [1.0]])
        g = np.array([0.5, 0.5, -0.5, -0.5])
        h = np.array([0.25, 0.25, 0.25, 0.25])
        root = fit_regression_tree(x, g, h, max_depth=1, l2=1.0,
                                   learning_rate=0.1)
        left = regression_tree_predict(root, np.array([[0.0]]))[0]
        right = regression_tree_predict(root, np.array([[1.0]]))[0]
        assert left == pytest.approx(-0.1 * 1.0 / (0.5 + 1.0))
        assert right == pytest.approx(-0.1 * -1.0 / (0.5 + 1.0))

    def test_fits_blobs(self):
        data = make_blobs(20, [[0, 0], [4, 4], [0, 4]], scale=0.5, seed=10)
        model = train_gbt(data, LearnerConfig(kind="gbt", n_trees=10))
        assert (model.predict(data.x) == data.y).mean() >= 0.95


class TestDispatchAndSerialization:
    def test_train_learner_covers_all_kinds(self):
        data = make_blobs(15, [[0, 0], [4, 4]], scale=0.5, seed=11)
        for kind in KINDS:
            cfg = LearnerConfig(kind=kind, n_trees=5, epochs=20)
            model = train_learner(data, cfg)
            assert model.kind == kind
            assert model.predict_proba(data.x).shape == (30, 2)

    def test_feature_count_validated_at_predict(self):
        data = make_blobs(10, [[0, 0], [3, 3]], scale=0.5, seed=12)
        model = train_learner(data, LearnerConfig(kind="logreg"))
        with pytest.raises(TrainingError, match="features"):
            model.predict_proba(np.zeros((2, 5)))

    @pytest.mark.parametrize("kind", KINDS)
    def test_json_round_trip_preserves_predictions(self, kind):
        data = make_blobs(15, [[0, 0], [4, 4]], scale=0.5, seed=13)
        cfg = LearnerConfig(kind=kind, n_trees=5, epochs=20)
        model = train_learner(data, cfg)
        text = model_to_json(model, hyperparameters=cfg.to_dict())
        json.loads(text)                       # valid JSON document
        restored = model_from_json(text)
        assert np.allclose(model.predict_proba(data.x),
                           restored.predict_proba(data.x))


class TestSelectionAndCurves:
    def test_select_features_keeps_informative_columns(self):
        rng = np.random.default_rng(14)
        signal = make_blobs(40, [[0.0], [5.0]], scale=0.5, seed=14)
        noise = rng.normal(size=(80, 4))
        data = LabeledMatrix(np.hstack([signal.x, noise]), signal.y,
                             2, signal.label_vocab)
        mask, reduced = select_features(data, threshold=1.0, seed=0)
        assert mask[0]
        assert reduced.x.shape[1] == mask.sum()

    def test_select_features_threshold_too_high(self):
        data = make_blobs(20, [[0, 0], [4, 4]], scale=0.5, seed=15)
        with pytest.raises(SelectionError, match="drops every feature"):
            select_features(data, threshold=1e9)

    def test_learning_curve_rows_and_determinism(self):
        data = make_blobs(30, [[0, 0], [3, 3]], scale=0.8, seed=16)
        cfg = LearnerConfig(kind="logreg", epochs=50, seed=5)
        rows = learning_curve(data, cfg, [0.5, 1.0], folds=3)
        again = learning_curve(data, cfg, [0.5, 1.0], folds=3)
        assert rows == again
        assert [r["fraction"] for r in rows] == [0.5, 1.0]
        for r in rows:
            assert 0.0 <= r["val_acc"] <= r["train_acc"] <= 1.0 or \
                   0.0 <= r["train_acc"] <= 1.0

    def test_learning_curve_rejects_vanishing_class(self):
        data = make_blobs(6, [[0, 0], [3, 3]], scale=0.5, seed=17)
        cfg = LearnerConfig(kind="logreg", epochs=5, seed=1)
        with pytest.raises(SelectionError, match="no samples"):
            learning_curve(data, cfg, [0.01], folds=2)
