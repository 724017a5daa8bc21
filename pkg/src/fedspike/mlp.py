"""The federated server's stacking network.

A small fully-connected net (27 -> 25 -> 15 -> 9 in the stock
configuration) with ReLU hidden layers and a softmax head, trained on
concatenated local-model probability outputs with mini-batch Adam,
batch size 16, 100 epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .learners.logreg import softmax


class MlpError(RuntimeError):
    pass


DEFAULT_LAYERS = [27, 25, 15, 9]


@dataclass(frozen=True)
class MlpArchitecture:
    layer_sizes: tuple = tuple(DEFAULT_LAYERS)

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise MlpError("architecture needs at least input and output")

    def layer_param_counts(self) -> list[int]:
        sizes = self.layer_sizes
        return [sizes[i] * sizes[i + 1] + sizes[i + 1]
                for i in range(len(sizes) - 1)]

    def param_count(self) -> int:
        return sum(self.layer_param_counts())


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise MlpError("batch_size and epochs must be >= 1")

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "beta1": self.beta1,
                "beta2": self.beta2, "eps": self.eps,
                "batch_size": self.batch_size, "epochs": self.epochs,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        return cls(**raw)


@dataclass
class TrainTrace:
    """Per-epoch loss/accuracy on the full training set, measured at the
    start of each epoch (so entry 0 reflects the initial weights)."""

    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)


class MlpModel:
    kind = "mlp"

    def __init__(self, layer_sizes, weights, biases):
        self.layer_sizes = list(layer_sizes)
        self.weights = weights
        self.biases = biases
        self.n_features = self.layer_sizes[0]
        self.n_classes = self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_sizes,
                        [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def param_count(self) -> int:
        return sum(w.size + b.size
                   for w, b in zip(self.weights, self.biases))

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


def init_mlp(arch: MlpArchitecture, seed: int) -> MlpModel:
    """He-uniform weights (U[-sqrt(6/fan_in), +sqrt(6/fan_in)]), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    sizes = arch.layer_sizes
    for i in range(len(sizes) - 1):
        limit = np.sqrt(6.0 / sizes[i])
        weights.append(rng.uniform(-limit, limit, size=(sizes[i], sizes[i + 1])))
        biases.append(np.zeros(sizes[i + 1]))
    return MlpModel(list(sizes), weights, biases)


def _forward_pass(model: MlpModel, x: np.ndarray):
    """Returns (activations per layer, output probabilities)."""
    acts = [x]
    h = x
    n_layers = len(model.weights)
    for i in range(n_layers - 1):
        h = np.maximum(h @ model.weights[i] + model.biases[i], 0.0)
        acts.append(h)
    logits = h @ model.weights[-1] + model.biases[-1]
    return acts, softmax(logits)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise MlpError(
            f"expected {model.layer_sizes[0]} input columns, got {x.shape}")
    _, proba = _forward_pass(model, x)
    return proba


def cross_entropy(proba: np.ndarray, y: np.ndarray) -> float:
    n = y.size
    return float(-np.log(np.maximum(proba[np.arange(n), y], 1e-300)).mean())


def backprop_gradients(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Analytic gradients of mean cross-entropy w.r.t. every parameter.

    Returns (grad_weights, grad_biases) as lists parallel to the model's.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0:
        raise MlpError("empty batch")
    n = x.shape[0]
    acts, proba = _forward_pass(model, x)
    delta = proba.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return grad_w, grad_b


def train_mlp(model: MlpModel, x: np.ndarray, y: np.ndarray,
              cfg: TrainConfig):
    """Mini-batch Adam on mean cross-entropy; returns (model, TrainTrace).

    The input model is not modified. Data is reshuffled each epoch with a
    seeded generator; the last incomplete batch is used, not dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.size and y.max() >= model.n_classes:
        raise MlpError("labels outside the output range")
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    n = x.shape[0]

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    t = 0
    trace = TrainTrace()

    for _ in range(cfg.epochs):
        proba = forward(model, x)
        loss = cross_entropy(proba, y)
        if not np.isfinite(loss):
            raise MlpError(
                "training diverged (NaN/inf loss); lower the learning rate")
        trace.loss.append(loss)
        trace.accuracy.append(float((np.argmax(proba, axis=1) == y).mean()))

        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grad_w, grad_b = backprop_gradients(model, x[batch], y[batch])
            t += 1
            corr1 = 1.0 - cfg.beta1 ** t
            corr2 = 1.0 - cfg.beta2 ** t
            for params, grads, ms, vs in (
                    (model.weights, grad_w, m_w, v_w),
                    (model.biases, grad_b, m_b, v_b)):
                for i, g in enumerate(grads):
                    ms[i] = cfg.beta1 * ms[i] + (1 - cfg.beta1) * g
                    vs[i] = cfg.beta2 * vs[i] + (1 - cfg.beta2) * g * g
                    params[i] -= cfg.learning_rate * (ms[i] / corr1) / (
                        np.sqrt(vs[i] / corr2) + cfg.eps)
    return model, trace
