"""Importance-weighted feature selection and learning-curve generation."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..dataset import LabeledMatrix
from .base import LearnerConfig, TrainingError, train_learner
from .forest import train_forest


class SelectionError(ValueError):
    pass


def select_features(data: LabeledMatrix, threshold: float,
                    seed: int = 0, n_trees: int = 25):
    """Keep features whose forest importance >= threshold x mean importance.

    Returns (mask, reduced data). The boolean mask preserves column order
    and can be applied to future matrices with ``x[:, mask]``.
    """
    if threshold < 0:
        raise SelectionError(f"threshold must be >= 0, got {threshold}")
    cfg = LearnerConfig(kind="forest", n_trees=n_trees, seed=seed)
    forest = train_forest(data, cfg)
    importances = forest.feature_importances()
    mask = importances >= threshold * importances.mean()
    if not mask.any():
        raise SelectionError(
            f"threshold {threshold} drops every feature")
    reduced = LabeledMatrix(data.x[:, mask], data.y, data.n_classes,
                            data.label_vocab)
    return mask, reduced


def _stratified_folds(y: np.ndarray, folds: int, rng) -> list[np.ndarray]:
    """Class-balanced fold assignment; returns validation indices per fold."""
    assignment = np.zeros(y.size, dtype=np.int64)
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        members = rng.permutation(members)
        assignment[members] = np.arange(members.size) % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def _stratified_fraction(y: np.ndarray, idx: np.ndarray, fraction: float,
                         label_vocab, rng) -> np.ndarray:
    """Take a class-balanced fraction of idx; error if a class vanishes."""
    keep: list[np.ndarray] = []
    for cls in np.unique(y[idx]):
        members = idx[y[idx] == cls]
        m = int(round(fraction * members.size))
        if m == 0:
            name = label_vocab[cls] if label_vocab else str(cls)
            raise SelectionError(
                f"fraction {fraction} leaves class {name!r} with no samples")
        keep.append(rng.permutation(members)[:m])
    return np.concatenate(keep)


def learning_curve(data: LabeledMatrix, cfg: LearnerConfig,
                   fractions: list[float], folds: int):
    """Mean train/validation accuracy per training-set fraction.

    Returns a list of {"fraction", "train_acc", "val_acc"} rows, one per
    fraction, averaged over stratified folds. Deterministic given cfg.seed.
    """
    if folds < 2:
        raise SelectionError("folds must be >= 2")
    for f in fractions:
        if not 0 < f <= 1:
            raise SelectionError(f"fraction {f} outside (0, 1]")
    rng = np.random.default_rng(cfg.seed)
    val_folds = _stratified_folds(data.y, folds, rng)
    all_idx = np.arange(data.y.size)
    rows = []
    for fraction in fractions:
        train_accs, val_accs = [], []
        for val_idx in val_folds:
            train_idx = np.setdiff1d(all_idx, val_idx)
            sub_idx = _stratified_fraction(data.y, train_idx, fraction,
                                           data.label_vocab, rng)
            sub = data.subset(sub_idx)
            model = train_learner(sub, cfg)
            train_accs.append(float(
                (model.predict(sub.x) == sub.y).mean()))
            val = data.subset(val_idx)
            val_accs.append(float(
                (model.predict(val.x) == val.y).mean()))
        rows.append({"fraction": fraction,
                     "train_acc": float(np.mean(train_accs)),
                     "val_acc": float(np.mean(val_accs))})
    return rows
