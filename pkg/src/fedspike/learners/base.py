"""Shared learner configuration and the LocalModel interface."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np


class TrainingError(RuntimeError):
    pass


KINDS = ("logreg", "tree", "forest", "gbt")

# chosen to finish the desk-scale suites in minutes
DEFAULTS = {
    "logreg": {"learning_rate": 0.1, "epochs": 300, "l2": 1e-4},
    "tree": {"max_depth": 8},
    "forest": {"n_trees": 50, "max_depth": 8, "subsample": 1.0},
    "gbt": {"n_trees": 100, "max_depth": 3, "learning_rate": 0.1, "l2": 1.0},
}


@dataclass(frozen=True)
class LearnerConfig:
    kind: str
    learning_rate: Optional[float] = None
    epochs: Optional[int] = None
    max_depth: Optional[int] = None
    n_trees: Optional[int] = None
    subsample: Optional[float] = None
    l2: Optional[float] = None
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown learner kind {self.kind!r}; valid: {', '.join(KINDS)}")
        for name in ("learning_rate", "epochs", "max_depth", "n_trees",
                     "subsample", "l2"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be nonnegative, got {val}")
        if self.learning_rate is not None and self.learning_rate == 0:
            raise ValueError("learning_rate must be positive")

    def resolved(self, name: str):
        val = getattr(self, name)
        if val is not None:
            return val
        return DEFAULTS[self.kind].get(name)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "LearnerConfig":
        return cls(**raw)


class LocalModel:
    """Trained classifier exposing class-probability prediction."""

    kind: str = ""

    def __init__(self, n_features: int, n_classes: int):
        self.n_features = n_features
        self.n_classes = n_classes

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise TrainingError(
                f"expected {self.n_features} features, got shape {x.shape}")
        proba = self._proba(x)
        return proba

    def predict(self, x: np.ndarray) -> np.ndarray:
        # ties broken toward the lowest class index (argmax convention)
        return np.argmax(self.predict_proba(x), axis=1)

    def _proba(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        """Hyperdescriptor safe to send across the node boundary."""
        return {"kind": self.kind, "n_features": self.n_features,
                "n_classes": self.n_classes}


def check_training_inputs(data) -> None:
    if np.isnan(data.x).any():
        raise TrainingError("NaN in feature matrix")


def train_learner(data, cfg: LearnerConfig) -> LocalModel:
    """Dispatch on cfg.kind."""
    from .logreg import train_logreg
    from .tree import train_tree
    from .forest import train_forest
    from .gbt import train_gbt
    trainers = {"logreg": train_logreg, "tree": train_tree,
                "forest": train_forest, "gbt": train_gbt}
    return trainers[cfg.kind](data, cfg)
