"""Embedded dataset container and CSV persistence.

On disk an embedded dataset is ``<prefix>.csv`` with header
``id,label,f0..f{dim-1}`` plus a sidecar descriptor ``<prefix>.json``
holding ``{"method", "k", "dim", "pad_len"}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledMatrix:
    """Feature matrix with integer class labels in [0, C)."""

    x: np.ndarray
    y: np.ndarray
    n_classes: int
    label_vocab: tuple[str, ...]

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise DatasetError("x and y shapes disagree")
        if self.x.shape[0] < 1 or self.x.shape[1] < 1:
            raise DatasetError("matrix must have at least one row and column")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise DatasetError("labels outside [0, C)")

    def subset(self, idx) -> "LabeledMatrix":
        idx = np.asarray(idx)
        return LabeledMatrix(self.x[idx], self.y[idx], self.n_classes,
                             self.label_vocab)


@dataclass(frozen=True)
class EmbeddedDataset:
    ids: tuple[str, ...]
    x: np.ndarray
    labels: tuple[Optional[str], ...]
    label_vocab: tuple[str, ...]
    descriptor: dict

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, idx) -> "EmbeddedDataset":
        idx = list(idx)
        return EmbeddedDataset(
            tuple(self.ids[i] for i in idx), self.x[np.asarray(idx)],
            tuple(self.labels[i] for i in idx), self.label_vocab,
            self.descriptor)

    def to_labeled_matrix(self) -> LabeledMatrix:
        if any(lb is None for lb in self.labels):
            raise DatasetError("dataset has unlabeled rows")
        index = {lb: i for i, lb in enumerate(self.label_vocab)}
        y = np.array([index[lb] for lb in self.labels], dtype=np.int64)
        return LabeledMatrix(self.x, y, len(self.label_vocab),
                             self.label_vocab)


def save_embedded(ds: EmbeddedDataset, prefix) -> None:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    dim = ds.x.shape[1]
    with open(prefix.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i}" for i in range(dim)])
        for i, (sid, label) in enumerate(zip(ds.ids, ds.labels)):
            writer.writerow([sid, label if label is not None else ""]
                            + [repr(float(v)) for v in ds.x[i]])
    with open(prefix.with_suffix(".json"), "w") as fh:
        doc = dict(ds.descriptor)
        doc["label_vocab"] = list(ds.label_vocab)
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_embedded(prefix) -> EmbeddedDataset:
    prefix = Path(prefix)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    if not csv_path.exists():
        raise DatasetError(f"missing dataset file {csv_path}")
    with open(json_path) as fh:
        descriptor = json.load(fh)
    ids: list[str] = []
    labels: list[Optional[str]] = []
    rows: list[list[float]] = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["id", "label"]:
            raise DatasetError(f"{csv_path}: expected header id,label,f0..")
        for row in reader:
            ids.append(row[0])
            labels.append(row[1] if row[1] else None)
            rows.append([float(v) for v in row[2:]])
    x = np.array(rows)
    # the descriptor pins the class ordering so shards written from a
    # larger dataset keep globally consistent label indices
    if "label_vocab" in descriptor:
        vocab = list(descriptor.pop("label_vocab"))
    else:
        vocab = []
        for lb in labels:
            if lb is not None and lb not in vocab:
                vocab.append(lb)
    return EmbeddedDataset(tuple(ids), x, tuple(labels), tuple(vocab),
                           descriptor)


def embedded_from_corpus(corpus, x: np.ndarray, descriptor: dict) -> EmbeddedDataset:
    return EmbeddedDataset(
        tuple(s.id for s in corpus.sequences), x,
        tuple(s.label for s in corpus.sequences),
        corpus.label_vocab, descriptor)
