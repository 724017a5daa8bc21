"""Local classifiers trained on data shards.

All learners are implemented here directly (no external ML dependency),
expose `predict_proba`, and are deterministic under a fixed seed.
"""

from .base import (DEFAULTS, KINDS, LearnerConfig, LocalModel, TrainingError,
                   train_learner)
from .logreg import LogisticRegressionModel, train_logreg
from .tree import DecisionTreeModel, train_tree
from .forest import RandomForestModel, train_forest
from .gbt import GradientBoostedModel, train_gbt
from .selection import learning_curve, select_features
from .serialize import model_from_json, model_to_json

__all__ = [
    "DEFAULTS", "KINDS",
    "LearnerConfig", "LocalModel", "TrainingError", "train_learner",
    "LogisticRegressionModel", "train_logreg",
    "DecisionTreeModel", "train_tree",
    "RandomForestModel", "train_forest",
    "GradientBoostedModel", "train_gbt",
    "select_features", "learning_curve",
    "model_to_json", "model_from_json",
]
