"""Centralized baseline and multi-run orchestration shared by the CLI."""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from .dataset import EmbeddedDataset, LabeledMatrix
from .federation import make_split, run_federated_training
from .learners import LearnerConfig, train_learner
from .metrics import classification_metrics
from .mlp import TrainConfig


def run_baseline(dataset: EmbeddedDataset | LabeledMatrix,
                 cfg: LearnerConfig, seed: int, stratified: bool = True):
    """Train one learner centrally on the full 70% train split.

    The comparison arm against federated mode: same split, no sharding.
    Returns (model, MetricsReport).
    """
    data = (dataset.to_labeled_matrix()
            if isinstance(dataset, EmbeddedDataset) else dataset)
    plan = make_split(data.x.shape[0], seed, stratified, labels=data.y)
    train = data.subset(list(plan.train_idx()))
    test = data.subset(list(plan.test_idx))
    cfg = replace(cfg, seed=seed * 100 + 1)
    start = time.perf_counter()
    model = train_learner(train, cfg)
    train_time = time.perf_counter() - start
    proba = model.predict_proba(test.x)
    pred = np.argmax(proba, axis=1)
    report = classification_metrics(test.y, pred, proba, data.n_classes,
                                    train_time_seconds=train_time)
    return model, report


def run_federated_series(dataset, local_cfg, global_cfg: TrainConfig,
                         seed: int, runs: int, stratified: bool = True):
    """One federated run per seed offset; yields (run_seed, FederationRun)."""
    for r in range(runs):
        run_seed = seed + r
        yield run_seed, run_federated_training(
            dataset, local_cfg, global_cfg, run_seed, stratified)
