"""Shared fixtures: tiny corpora and labeled matrices for fast tests."""

import numpy as np
import pytest

from fedspike.sequences import ProteinSequence, make_corpus


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        ProteinSequence("s1", "MFVFLVLL", "A"),
        ProteinSequence("s2", "MFVFAVLL", "A"),
        ProteinSequence("s3", "GGGGGGGG", "B"),
        ProteinSequence("s4", "GGGGGGGA", "B"),
    ])


def make_blobs(n_per_class, centers, scale, seed, label_vocab=None):
    """Gaussian blobs as a LabeledMatrix; centers is a list of vectors."""
    from fedspike.dataset import LabeledMatrix
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c, center in enumerate(centers):
        xs.append(rng.normal(loc=center, scale=scale,
                             size=(n_per_class, len(center))))
        ys.append(np.full(n_per_class, c, dtype=np.int64))
    vocab = label_vocab or tuple(f"c{c}" for c in range(len(centers)))
    return LabeledMatrix(np.concatenate(xs), np.concatenate(ys),
                         len(centers), tuple(vocab))
