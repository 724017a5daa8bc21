"""Random forest: bagged Gini trees with sqrt(d) feature subsampling."""

from __future__ import annotations

import numpy as np

from .base import LearnerConfig, LocalModel, TrainingError, check_training_inputs
from .tree import DecisionTreeModel, _grow_classification, accumulate_importances


class RandomForestModel(LocalModel):
    kind = "forest"

    def __init__(self, trees: list[DecisionTreeModel], n_features: int,
                 n_classes: int, oob_accuracy=None):
        super().__init__(n_features, n_classes)
        self.trees = trees
        self.oob_accuracy = oob_accuracy

    def _proba(self, x: np.ndarray) -> np.ndarray:
        total = np.zeros((x.shape[0], self.n_classes))
        for tree in self.trees:
            total += tree.predict_proba(x)
        return total / len(self.trees)

    def feature_importances(self) -> np.ndarray:
        """Mean impurity decrease across trees, normalised to sum 1."""
        imp = np.zeros(self.n_features)
        for tree in self.trees:
            accumulate_importances(tree.root, imp)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def describe(self) -> dict:
        out = super().describe()
        out["n_trees"] = len(self.trees)
        return out


def train_forest(data, cfg: LearnerConfig, bootstrap: bool = True) -> RandomForestModel:
    if cfg.kind != "forest":
        raise TrainingError(f"config kind {cfg.kind!r} is not forest")
    check_training_inputs(data)
    x = np.asarray(data.x, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.int64)
    n, d = x.shape
    n_trees = int(cfg.resolved("n_trees"))
    max_depth = int(cfg.resolved("max_depth"))
    subsample = cfg.resolved("subsample") or 1.0
    max_features = max(1, int(np.sqrt(d))) if bootstrap else None
    rng = np.random.default_rng(cfg.seed)

    trees: list[DecisionTreeModel] = []
    oob_votes = np.zeros((n, data.n_classes))
    for _ in range(n_trees):
        if bootstrap:
            m = int(round(subsample * n))
            idx = rng.integers(0, n, size=m)
        else:
            idx = np.arange(n)
        root = _grow_classification(x[idx], y[idx], data.n_classes, 0,
                                    max_depth, rng, max_features)
        tree = DecisionTreeModel(root, d, data.n_classes)
        trees.append(tree)
        if bootstrap:
            oob = np.setdiff1d(np.arange(n), idx, assume_unique=False)
            if oob.size:
                oob_votes[oob] += tree.predict_proba(x[oob])

    oob_accuracy = None
    if bootstrap:
        covered = oob_votes.sum(axis=1) > 0
        if covered.any():
            pred = np.argmax(oob_votes[covered], axis=1)
            oob_accuracy = float((pred == y[covered]).mean())
    return RandomForestModel(trees, d, data.n_classes, oob_accuracy)
