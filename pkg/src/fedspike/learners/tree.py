"""Binary CART trees: Gini classification and Newton-gain regression.

The regression variant carries per-sample gradient/hessian pairs so the
gradient-boosting trainer can grow XGBoost-style trees with l2-regularised
leaf values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import LearnerConfig, LocalModel, TrainingError, check_training_inputs


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: Optional[np.ndarray] = None   # leaf: class distribution or scalar
    n_samples: int = 0
    impurity_decrease: float = 0.0       # weighted, for importances

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": np.asarray(self.value).tolist(),
                    "n": self.n_samples}
        return {"feature": self.feature, "threshold": self.threshold,
                "n": self.n_samples,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, raw: dict) -> "TreeNode":
        if "value" in raw:
            return cls(value=np.array(raw["value"]), n_samples=raw["n"])
        return cls(feature=raw["feature"], threshold=raw["threshold"],
                   n_samples=raw["n"],
                   left=cls.from_dict(raw["left"]),
                   right=cls.from_dict(raw["right"]))


def _gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity for rows of class counts."""
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / np.maximum(total, 1)
    return 1.0 - (p ** 2).sum(axis=-1)


def best_gini_split(x, y, n_classes, features):
    """Exhaustive threshold search over the given features.

    Returns (feature, threshold, impurity_decrease) or None. Thresholds are
    midpoints between consecutive distinct sorted values; a sample goes
    left when value <= threshold.
    """
    n = y.size
    counts_total = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent_gini = float(_gini(counts_total))
    best = None
    best_gain = 1e-12   # require strictly positive decrease
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for j in features:
        col = x[:, j]
        order = np.argsort(col, kind="mergesort")
        sv = col[order]
        boundary = np.nonzero(sv[1:] > sv[:-1])[0]      # split after index i
        if boundary.size == 0:
            continue
        left_counts = np.cumsum(onehot[order], axis=0)[boundary]
        right_counts = counts_total - left_counts
        n_left = boundary + 1
        n_right = n - n_left
        child = (n_left * _gini(left_counts)
                 + n_right * _gini(right_counts)) / n
        gain = parent_gini - child
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            thr = (sv[boundary[k]] + sv[boundary[k] + 1]) / 2
            best = (int(j), float(thr), best_gain)
    return best


def _grow_classification(x, y, n_classes, depth, max_depth, rng, max_features):
    node = TreeNode(n_samples=y.size)
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    if depth >= max_depth or y.size < 2 or (counts > 0).sum() < 2:
        node.value = counts / counts.sum()
        return node
    d = x.shape[1]
    if max_features is not None and max_features < d:
        features = rng.choice(d, size=max_features, replace=False)
    else:
        features = np.arange(d)
    split = best_gini_split(x, y, n_classes, features)
    if split is None:
        node.value = counts / counts.sum()
        return node
    node.feature, node.threshold, gain = split
    node.impurity_decrease = gain * y.size
    mask = x[:, node.feature] <= node.threshold
    node.left = _grow_classification(x[mask], y[mask], n_classes,
                                     depth + 1, max_depth, rng, max_features)
    node.right = _grow_classification(x[~mask], y[~mask], n_classes,
                                      depth + 1, max_depth, rng, max_features)
    return node


def _apply(node: TreeNode, x: np.ndarray) -> np.ndarray:
    """Leaf value per row; stacks to (n, value_dim) or (n,) for scalars."""
    out = None
    idx = np.arange(x.shape[0])

    def descend(nd, rows):
        nonlocal out
        if nd.is_leaf:
            val = np.asarray(nd.value, dtype=np.float64)
            if out is None:
                shape = (x.shape[0],) + val.shape
                out = np.zeros(shape)  # type: ignore[assignment]
            out[rows] = val
            return
        mask = x[rows, nd.feature] <= nd.threshold
        descend(nd.left, rows[mask])
        descend(nd.right, rows[~mask])

    descend(node, idx)
    return out


def accumulate_importances(node: TreeNode, importances: np.ndarray) -> None:
    if node.is_leaf:
        return
    importances[node.feature] += node.impurity_decrease
    accumulate_importances(node.left, importances)
    accumulate_importances(node.right, importances)


class DecisionTreeModel(LocalModel):
    kind = "tree"

    def __init__(self, root: TreeNode, n_features: int, n_classes: int):
        super().__init__(n_features, n_classes)
        self.root = root

    def _proba(self, x: np.ndarray) -> np.ndarray:
        return _apply(self.root, x)

    def feature_importances(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        accumulate_importances(self.root, imp)
        total = imp.sum()
        return imp / total if total > 0 else imp


def train_tree(data, cfg: LearnerConfig, rng=None, max_features=None) -> DecisionTreeModel:
    if cfg.kind not in ("tree", "forest"):
        raise TrainingError(f"config kind {cfg.kind!r} is not tree")
    check_training_inputs(data)
    x = np.asarray(data.x, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.int64)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    root = _grow_classification(x, y, data.n_classes, 0,
                                int(cfg.resolved("max_depth")), rng,
                                max_features)
    return DecisionTreeModel(root, x.shape[1], data.n_classes)


# --- regression tree for gradient boosting -----------------------------------


def _grow_regression(x, g, h, depth, max_depth, l2, learning_rate):
    """Newton tree on gradients g and hessians h; leaf = -lr * G/(H + l2)."""
    node = TreeNode(n_samples=g.size)
    G, H = g.sum(), h.sum()
    if depth >= max_depth or g.size < 2:
        node.value = np.array(-learning_rate * G / (H + l2))
        return node
    best = None
    best_gain = 1e-12
    parent_score = G * G / (H + l2)
    for j in range(x.shape[1]):
        col = x[:, j]
        order = np.argsort(col, kind="mergesort")
        sv = col[order]
        boundary = np.nonzero(sv[1:] > sv[:-1])[0]
        if boundary.size == 0:
            continue
        gl = np.cumsum(g[order])[boundary]
        hl = np.cumsum(h[order])[boundary]
        gain = (gl ** 2 / (hl + l2)
                + (G - gl) ** 2 / (H - hl + l2) - parent_score)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            thr = (sv[boundary[k]] + sv[boundary[k] + 1]) / 2
            best = (int(j), float(thr))
    if best is None:
        node.value = np.array(-learning_rate * G / (H + l2))
        return node
    node.feature, node.threshold = best
    mask = x[:, node.feature] <= node.threshold
    node.left = _grow_regression(x[mask], g[mask], h[mask],
                                 depth + 1, max_depth, l2, learning_rate)
    node.right = _grow_regression(x[~mask], g[~mask], h[~mask],
                                  depth + 1, max_depth, l2, learning_rate)
    return node


def fit_regression_tree(x, g, h, max_depth, l2, learning_rate) -> TreeNode:
    return _grow_regression(np.asarray(x, dtype=np.float64),
                            np.asarray(g, dtype=np.float64),
                            np.asarray(h, dtype=np.float64),
                            0, max_depth, l2, learning_rate)


def regression_tree_predict(root: TreeNode, x: np.ndarray) -> np.ndarray:
    return _apply(root, np.asarray(x, dtype=np.float64))
