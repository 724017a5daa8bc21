"""Multinomial (softmax) logistic regression by full-batch gradient descent."""

from __future__ import annotations

import warnings

import numpy as np

from .base import LearnerConfig, LocalModel, TrainingError, check_training_inputs


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LogisticRegressionModel(LocalModel):
    kind = "logreg"

    def __init__(self, weights: np.ndarray, bias: np.ndarray,
                 mean=None, scale=None):
        super().__init__(weights.shape[0], weights.shape[1])
        self.weights = weights      # d x C
        self.bias = bias            # C
        self.mean = mean            # standardization, stored with the model
        self.scale = scale

    def _proba(self, x: np.ndarray) -> np.ndarray:
        if self.mean is not None:
            x = (x - self.mean) / self.scale
        return softmax(x @ self.weights + self.bias)

    def describe(self) -> dict:
        out = super().describe()
        out["standardized"] = self.mean is not None
        return out


def logreg_loss_and_grads(weights, bias, x, y_onehot, l2):
    """Mean cross-entropy + l2*||W||^2 and its analytic gradients."""
    n = x.shape[0]
    proba = softmax(x @ weights + bias)
    eps = 1e-300
    loss = -np.log(np.maximum(proba[np.arange(n), y_onehot.argmax(axis=1)], eps)).mean()
    loss += l2 * float((weights ** 2).sum())
    delta = (proba - y_onehot) / n
    grad_w = x.T @ delta + 2 * l2 * weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def train_logreg(data, cfg: LearnerConfig) -> LogisticRegressionModel:
    if cfg.kind != "logreg":
        raise TrainingError(f"config kind {cfg.kind!r} is not logreg")
    check_training_inputs(data)
    x = np.asarray(data.x, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.int64)
    n, d = x.shape
    c = data.n_classes
    if len(np.unique(y)) < 2:
        warnings.warn("training data has a single class; model will be degenerate")

    mean = scale = None
    if cfg.standardize:
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        x = (x - mean) / scale

    lr = cfg.resolved("learning_rate")
    epochs = int(cfg.resolved("epochs"))
    l2 = cfg.resolved("l2")

    weights = np.zeros((d, c))
    bias = np.zeros(c)
    y_onehot = np.zeros((n, c))
    y_onehot[np.arange(n), y] = 1.0
    for _ in range(epochs):
        _, grad_w, grad_b = logreg_loss_and_grads(weights, bias, x, y_onehot, l2)
        weights -= lr * grad_w
        bias -= lr * grad_b
    return LogisticRegressionModel(weights, bias, mean, scale)
