"""Classification metrics, confusion matrices and multi-run aggregation.

Two independent computation paths exist on purpose: metrics derived from
the confusion matrix (`metrics_from_confusion`) and metrics accumulated
directly from the label lists (`metrics_from_labels`). Tests cross-check
them against each other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class MetricsError(ValueError):
    pass


METRIC_FIELDS = ("accuracy", "precision_weighted", "recall_weighted",
                 "f1_weighted", "f1_macro", "roc_auc_ovr")


@dataclass
class MetricsReport:
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    f1_macro: float
    roc_auc_ovr: float
    train_time_seconds: float
    confusion: np.ndarray
    zero_division_classes: int = 0

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in METRIC_FIELDS}
        out["train_time_seconds"] = self.train_time_seconds
        out["zero_division_classes"] = self.zero_division_classes
        out["confusion"] = self.confusion.astype(int).tolist()
        return out


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise MetricsError("y_true and y_pred lengths differ")
    if y_true.size and (min(y_true.min(), y_pred.min()) < 0
                        or max(y_true.max(), y_pred.max()) >= n_classes):
        raise MetricsError("labels outside [0, C)")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _prf(tp, fp, fn, support):
    """Per-class precision/recall/F1 with the zero-division -> 0 rule."""
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.maximum(denom, 1e-300), 0.0)
    zero_div = int((((tp + fp) == 0) | ((tp + fn) == 0)).sum())
    return precision, recall, f1, zero_div


def metrics_from_confusion(cm: np.ndarray) -> dict:
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    if total == 0:
        raise MetricsError("empty confusion matrix")
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    support = cm.sum(axis=1)
    precision, recall, f1, zero_div = _prf(tp, fp, fn, support)
    weights = support / total
    return {
        "accuracy": float(tp.sum() / total),
        "precision_weighted": float((precision * weights).sum()),
        # support-weighted recall telescopes to sum(tp)/total exactly
        # (zero-support classes contribute 0), i.e. the accuracy
        "recall_weighted": float(tp.sum() / total),
        "f1_weighted": float((f1 * weights).sum()),
        "f1_macro": float(f1.mean()),
        "zero_division_classes": zero_div,
    }


def metrics_from_labels(y_true, y_pred, n_classes: int) -> dict:
    """Independent path: per-class tallies straight from the label lists."""
    y_true = list(map(int, y_true))
    y_pred = list(map(int, y_pred))
    if len(y_true) != len(y_pred):
        raise MetricsError("y_true and y_pred lengths differ")
    tp = [0] * n_classes
    fp = [0] * n_classes
    fn = [0] * n_classes
    support = [0] * n_classes
    correct = 0
    for t, p in zip(y_true, y_pred):
        support[t] += 1
        if t == p:
            tp[t] += 1
            correct += 1
        else:
            fp[p] += 1
            fn[t] += 1
    n = len(y_true)
    precision, recall, f1, zero_div = _prf(
        np.array(tp, float), np.array(fp, float), np.array(fn, float),
        np.array(support, float))
    weights = np.array(support, float) / n
    return {
        "accuracy": correct / n,
        "precision_weighted": float((precision * weights).sum()),
        "recall_weighted": correct / n,   # weighted recall == accuracy
        "f1_weighted": float((f1 * weights).sum()),
        "f1_macro": float(f1.mean()),
        "zero_division_classes": zero_div,
    }


def _midrank(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their midrank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def roc_auc_ovr(y_true, proba, n_classes: int) -> float:
    """One-vs-rest ROC-AUC, macro-averaged over classes present in y_true.

    Per class: Mann-Whitney rank statistic of the class's probability
    column against the binary indicator, ties resolved by midrank.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    if proba.shape != (y_true.size, n_classes):
        raise MetricsError("proba shape does not match labels / class count")
    aucs = []
    for c in range(n_classes):
        pos = y_true == c
        n_pos = int(pos.sum())
        n_neg = y_true.size - n_pos
        if n_pos == 0:
            warnings.warn(f"class {c} absent from y_true; skipped in ROC-AUC")
            continue
        if n_neg == 0:
            warnings.warn(f"class {c} is the only class; skipped in ROC-AUC")
            continue
        ranks = _midrank(proba[:, c])
        auc = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
        aucs.append(auc)
    if not aucs:
        raise MetricsError("no class with both positives and negatives")
    return float(np.mean(aucs))


def classification_metrics(y_true, y_pred, proba, n_classes: int,
                           train_time_seconds: float = 0.0) -> MetricsReport:
    cm = confusion_matrix(y_true, y_pred, n_classes)
    base = metrics_from_confusion(cm)
    auc = roc_auc_ovr(y_true, proba, n_classes)
    return MetricsReport(
        accuracy=base["accuracy"],
        precision_weighted=base["precision_weighted"],
        recall_weighted=base["recall_weighted"],
        f1_weighted=base["f1_weighted"],
        f1_macro=base["f1_macro"],
        roc_auc_ovr=auc,
        train_time_seconds=train_time_seconds,
        confusion=cm,
        zero_division_classes=base["zero_division_classes"],
    )


@dataclass
class RunSummary:
    """Per-metric mean and population standard deviation over R runs."""

    n_runs: int
    mean: dict
    std: dict

    def rows(self):
        for name in list(self.mean):
            yield name, self.mean[name], self.std[name]


def aggregate_runs(reports: list[MetricsReport]) -> RunSummary:
    if not reports:
        raise MetricsError("no reports to aggregate")
    names = METRIC_FIELDS + ("train_time_seconds",)
    mean = {}
    std = {}
    for name in names:
        vals = np.array([getattr(r, name) for r in reports])
        mean[name] = float(vals.mean())
        std[name] = float(vals.std())  # population std, divisor R
    return RunSummary(len(reports), mean, std)
