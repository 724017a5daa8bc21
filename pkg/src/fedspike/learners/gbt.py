"""Gradient-boosted trees: one-vs-rest Newton boosting on softmax log-loss.

Per round one depth-limited regression tree is fit per class against the
softmax gradient (p - y); leaf values take an l2 penalty and shrinkage, so
the ensemble regularises the way boosted-tree libraries do.
"""

from __future__ import annotations

import numpy as np

from .base import LearnerConfig, LocalModel, TrainingError, check_training_inputs
from .logreg import softmax
from .tree import TreeNode, fit_regression_tree, regression_tree_predict


class GradientBoostedModel(LocalModel):
    kind = "gbt"

    def __init__(self, base_scores: np.ndarray,
                 rounds: list[list[TreeNode]], n_features: int,
                 n_classes: int, loss_trace: list[float]):
        super().__init__(n_features, n_classes)
        self.base_scores = base_scores          # log class priors
        self.rounds = rounds                    # [round][class] -> tree
        self.loss_trace = loss_trace

    def _scores(self, x: np.ndarray) -> np.ndarray:
        scores = np.tile(self.base_scores, (x.shape[0], 1))
        for trees in self.rounds:
            for c, root in enumerate(trees):
                scores[:, c] += regression_tree_predict(root, x)
        return scores

    def _proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self._scores(x))

    def describe(self) -> dict:
        out = super().describe()
        out["n_rounds"] = len(self.rounds)
        return out


def _log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    proba = softmax(scores)
    return float(-np.log(np.maximum(proba[np.arange(y.size), y], 1e-300)).mean())


def train_gbt(data, cfg: LearnerConfig) -> GradientBoostedModel:
    if cfg.kind != "gbt":
        raise TrainingError(f"config kind {cfg.kind!r} is not gbt")
    check_training_inputs(data)
    x = np.asarray(data.x, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.int64)
    n, d = x.shape
    c = data.n_classes
    n_rounds = int(cfg.resolved("n_trees"))
    max_depth = int(cfg.resolved("max_depth"))
    lr = cfg.resolved("learning_rate")
    l2 = cfg.resolved("l2")

    priors = np.bincount(y, minlength=c).astype(np.float64) / n
    base_scores = np.log(np.maximum(priors, 1e-300))
    scores = np.tile(base_scores, (n, 1))
    y_onehot = np.zeros((n, c))
    y_onehot[np.arange(n), y] = 1.0

    rounds: list[list[TreeNode]] = []
    loss_trace = [_log_loss(scores, y)]
    for _ in range(n_rounds):
        proba = softmax(scores)
        grad = proba - y_onehot
        hess = proba * (1.0 - proba)
        round_trees: list[TreeNode] = []
        for cls in range(c):
            root = fit_regression_tree(x, grad[:, cls], hess[:, cls],
                                       max_depth, l2, lr)
            round_trees.append(root)
            scores[:, cls] += regression_tree_predict(root, x)
        rounds.append(round_trees)
        loss_trace.append(_log_loss(scores, y))
    return GradientBoostedModel(base_scores, rounds, d, c, loss_trace)
