"""Self-describing JSON container for every trained model kind.

Schema: ``{"version": 1, "kind": ..., "hyperparameters": {...},
"label_vocab": [...], "feature_mask": [...] | null, ...weights}``.
"""

from __future__ import annotations

import json

import numpy as np

from .base import LocalModel
from .forest import RandomForestModel
from .gbt import GradientBoostedModel
from .logreg import LogisticRegressionModel
from .tree import DecisionTreeModel, TreeNode

CONTAINER_VERSION = 1


class ModelFormatError(ValueError):
    pass


def model_to_json(model, hyperparameters: dict | None = None,
                  label_vocab=None, feature_mask=None) -> str:
    doc = {
        "version": CONTAINER_VERSION,
        "kind": model.kind,
        "hyperparameters": hyperparameters or {},
        "label_vocab": list(label_vocab) if label_vocab else None,
        "feature_mask": (np.asarray(feature_mask).astype(int).tolist()
                         if feature_mask is not None else None),
        "n_features": model.n_features,
        "n_classes": model.n_classes,
    }
    if isinstance(model, LogisticRegressionModel):
        doc["weights"] = model.weights.tolist()
        doc["bias"] = model.bias.tolist()
        doc["mean"] = model.mean.tolist() if model.mean is not None else None
        doc["scale"] = model.scale.tolist() if model.scale is not None else None
    elif isinstance(model, DecisionTreeModel):
        doc["tree"] = model.root.to_dict()
    elif isinstance(model, RandomForestModel):
        doc["trees"] = [t.root.to_dict() for t in model.trees]
    elif isinstance(model, GradientBoostedModel):
        doc["base_scores"] = model.base_scores.tolist()
        doc["rounds"] = [[t.to_dict() for t in trees]
                         for trees in model.rounds]
    else:
        # MLP weights come through the same container; see fedspike.mlp
        from ..mlp import MlpModel
        if isinstance(model, MlpModel):
            doc["kind"] = "mlp"
            doc["layer_sizes"] = model.layer_sizes
            doc["weights"] = [w.tolist() for w in model.weights]
            doc["biases"] = [b.tolist() for b in model.biases]
        else:
            raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc)


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("version") != CONTAINER_VERSION:
        raise ModelFormatError(
            f"unsupported model container version {doc.get('version')!r}")
    kind = doc["kind"]
    if kind == "logreg":
        return LogisticRegressionModel(
            np.array(doc["weights"]), np.array(doc["bias"]),
            np.array(doc["mean"]) if doc["mean"] is not None else None,
            np.array(doc["scale"]) if doc["scale"] is not None else None)
    if kind == "tree":
        return DecisionTreeModel(TreeNode.from_dict(doc["tree"]),
                                 doc["n_features"], doc["n_classes"])
    if kind == "forest":
        trees = [DecisionTreeModel(TreeNode.from_dict(t),
                                   doc["n_features"], doc["n_classes"])
                 for t in doc["trees"]]
        return RandomForestModel(trees, doc["n_features"], doc["n_classes"])
    if kind == "gbt":
        rounds = [[TreeNode.from_dict(t) for t in trees]
                  for trees in doc["rounds"]]
        return GradientBoostedModel(np.array(doc["base_scores"]), rounds,
                                    doc["n_features"], doc["n_classes"], [])
    if kind == "mlp":
        from ..mlp import MlpModel
        return MlpModel(doc["layer_sizes"],
                        [np.array(w) for w in doc["weights"]],
                        [np.array(b) for b in doc["biases"]])
    raise ModelFormatError(f"unknown model kind {kind!r}")
