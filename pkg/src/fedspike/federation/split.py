"""Disjoint 70/30 test split plus four near-equal training shards."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TEST_FRACTION = 0.30
N_SHARDS = 4


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    test_idx: tuple
    shard_idx: tuple            # four tuples: tr1..tr4
    seed: int
    stratified: bool

    @property
    def tr1_idx(self):
        return self.shard_idx[0]

    @property
    def tr2_idx(self):
        return self.shard_idx[1]

    @property
    def tr3_idx(self):
        return self.shard_idx[2]

    @property
    def tr4_idx(self):
        return self.shard_idx[3]

    def train_idx(self) -> tuple:
        return tuple(i for shard in self.shard_idx for i in shard)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stratified": self.stratified,
                "test_idx": list(self.test_idx),
                "shards": [list(s) for s in self.shard_idx]}

    @classmethod
    def from_dict(cls, raw: dict) -> "SplitPlan":
        return cls(tuple(raw["test_idx"]),
                   tuple(tuple(s) for s in raw["shards"]),
                   raw["seed"], raw["stratified"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SplitPlan":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _largest_remainder(counts: np.ndarray, total: int) -> np.ndarray:
    """Integer per-class quotas summing exactly to ``total``."""
    exact = counts * total / counts.sum()
    base = np.floor(exact).astype(np.int64)
    short = total - base.sum()
    order = np.argsort(-(exact - base), kind="mergesort")
    base[order[:short]] += 1
    return base


def make_split(n: int, seed: int, stratified: bool = True,
               labels=None) -> SplitPlan:
    """70/30 test split, then the training pool dealt into four shards.

    |test| == round(0.30 n); shard sizes differ by at most 1. Deterministic
    given the seed.
    """
    if n < 10:
        raise SplitError(f"need at least 10 samples, got {n}")
    rng = np.random.default_rng(seed)
    n_test = int(round(TEST_FRACTION * n))

    if stratified:
        if labels is None:
            raise SplitError("stratified split requires labels")
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size != n:
            raise SplitError("labels length does not match n")
        classes, counts = np.unique(labels, return_counts=True)
        small = classes[counts < 5]
        if small.size:
            raise SplitError(
                f"class {int(small[0])} has fewer than 5 members; "
                f"cannot stratify")
        quotas = _largest_remainder(counts.astype(np.float64), n_test)
        test: list[int] = []
        train: list[int] = []
        for cls, quota in zip(classes, quotas):
            members = rng.permutation(np.nonzero(labels == cls)[0])
            test.extend(members[:quota].tolist())
            train.append(members[quota:])
        # interleave classes so every shard sees every class
        train_pool = np.concatenate(train)
        train_pool = rng.permutation(train_pool)
    else:
        order = rng.permutation(n)
        test = order[:n_test].tolist()
        train_pool = order[n_test:]

    shards: list[list[int]] = [[] for _ in range(N_SHARDS)]
    for i, idx in enumerate(train_pool):
        shards[i % N_SHARDS].append(int(idx))
    return SplitPlan(tuple(int(i) for i in test),
                     tuple(tuple(s) for s in shards), seed, stratified)
