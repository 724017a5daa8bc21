"""Ready-made synthetic 9-lineage corpus for demos and acceptance runs.

Mirrors the structure of the real variant data: nine named lineages, each
defined by a small set of point mutations on a shared reference. With
``twins=True`` the two Epsilon lineages share an identical signature, so
they are indistinguishable from the spike region alone.
"""

from __future__ import annotations

import numpy as np

from .alphabet import ALPHABET
from .sequences import (Corpus, MutationSignature, ProteinSequence,
                        random_reference, synth_lineages)

LINEAGES = ("B.1.351", "B.1.427", "B.1.429", "B.1.525", "B.1.526",
            "B.1.617.2", "B.1.621", "C.37", "P.1")

TWIN_PAIR = ("B.1.427", "B.1.429")   # the Epsilon pair


def demo_signatures(reference: ProteinSequence, seed: int = 7,
                    edits_per_class: int = 3,
                    twins: bool = False) -> list[MutationSignature]:
    """Deterministic, pairwise-distinct signatures against the reference.

    With ``twins=True`` the Epsilon pair gets byte-identical edit sets and
    all signatures remain distinct otherwise.
    """
    rng = np.random.default_rng(seed)
    n = len(reference)
    signatures = []
    used_positions: set[int] = set()
    shared_edits = None
    for lineage in LINEAGES:
        if twins and lineage in TWIN_PAIR and shared_edits is not None:
            signatures.append(MutationSignature(lineage, shared_edits))
            continue
        edits = []
        while len(edits) < edits_per_class:
            pos = int(rng.integers(1, n + 1))
            if pos in used_positions:
                continue
            used_positions.add(pos)
            frm = reference.residues[pos - 1]
            choices = [c for c in ALPHABET.symbols if c not in (frm, "X")]
            to = choices[int(rng.integers(0, len(choices)))]
            edits.append((pos, frm, to))
        edits = tuple(sorted(edits))
        signatures.append(MutationSignature(lineage, edits))
        if twins and lineage in TWIN_PAIR:
            shared_edits = edits
    return signatures


def demo_corpus(per_class: int = 300, length: int = 200,
                noise_rate: float = 0.01, seed: int = 7,
                twins: bool = False) -> Corpus:
    reference = random_reference(length, seed=seed)
    signatures = demo_signatures(reference, seed=seed, twins=twins)
    return synth_lineages(reference, signatures, per_class, noise_rate, seed)


def demo_reference(length: int = 200, seed: int = 7) -> ProteinSequence:
    return random_reference(length, seed=seed)
