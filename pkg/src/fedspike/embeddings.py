"""Sequence embeddings: one-hot, k-mer counts, PWM scores, string kernel.

All four methods treat PAD positions as information-free: they contribute
an all-zero block to the one-hot vector and nothing anywhere else.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alphabet import ALPHABET, PAD
from .sequences import Corpus, ProteinSequence

EIG_DROP_FACTOR = 1e-10  # components with eigenvalue <= this x max are noise


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class KmerIndex:
    """Bijection between k-mers over the alphabet and [0, 21^k), ordered
    lexicographically by alphabet position."""

    k: int

    @property
    def size(self) -> int:
        return len(ALPHABET) ** self.k

    def index_of(self, kmer: str) -> int:
        idx = 0
        for c in kmer:
            idx = idx * len(ALPHABET) + ALPHABET.index_of[c]
        return idx


def _codes(seq: ProteinSequence) -> np.ndarray:
    codes = ALPHABET.encode(seq.residues)
    if (codes == 255).any():
        raise EmbeddingError(f"sequence {seq.id}: invalid residue")
    return codes.astype(np.int64)


def one_hot_encode(seq: ProteinSequence, l: int) -> np.ndarray:
    """Flat 0/1 vector of dimension 21*l; one 21-block per position."""
    n = len(seq)
    if n > l:
        raise EmbeddingError(
            f"sequence {seq.id} length {n} exceeds padded length {l}")
    vec = np.zeros(len(ALPHABET) * l)
    codes = _codes(seq)
    vec[np.arange(n) * len(ALPHABET) + codes] = 1.0
    return vec


def kmer_codes(seq: ProteinSequence, k: int) -> np.ndarray:
    """Integer index of every k-mer of the (unpadded) sequence."""
    n = len(seq)
    if n < k:
        raise EmbeddingError(
            f"sequence {seq.id} length {n} shorter than k={k}")
    codes = _codes(seq)
    base = len(ALPHABET)
    weights = base ** np.arange(k - 1, -1, -1, dtype=np.int64)
    out = np.zeros(n - k + 1, dtype=np.int64)
    for i in range(k):
        out += codes[i:n - k + 1 + i] * weights[i]
    return out


def spike2vec(seq: ProteinSequence, k: int = 3) -> np.ndarray:
    """k-mer count vector of dimension 21^k; entries sum to n-k+1."""
    index = KmerIndex(k)
    vec = np.zeros(index.size)
    np.add.at(vec, kmer_codes(seq, k), 1.0)
    return vec


# --- PWM ---------------------------------------------------------------------

LAPLACE = 0.1


@dataclass(frozen=True)
class PwmModel:
    k: int
    pfm: np.ndarray        # 21 x k integer counts
    ppm: np.ndarray        # 21 x k, column-normalised counts + Laplace 0.1
    pwm: np.ndarray        # 21 x k, log2(ppm / background)
    background: dict


def build_pwm(seq: ProteinSequence, k: int = 9) -> PwmModel:
    """Per-sequence position weight matrix over the k-mer stack.

    PFM counts residue occurrences per k-mer offset; PPM column-normalises
    then adds the Laplace value 0.1 to every entry; PWM is the log2 ratio
    against the sense-codon background n(c)/61.
    """
    n = len(seq)
    if n < k:
        raise EmbeddingError(
            f"sequence {seq.id} length {n} shorter than k={k}")
    codes = _codes(seq)
    n_sym = len(ALPHABET)
    pfm = np.zeros((n_sym, k), dtype=np.int64)
    for i in range(k):
        col = codes[i:n - k + 1 + i]
        np.add.at(pfm[:, i], col, 1)
    ppm = pfm / pfm.sum(axis=0, keepdims=True) + LAPLACE
    bg = np.array([ALPHABET.background(c) for c in ALPHABET.symbols])
    pwm = np.log2(ppm / bg[:, None])
    background = {c: ALPHABET.background(c) for c in ALPHABET.symbols}
    return PwmModel(k, pfm, ppm, pwm, background)


def pwm2vec(seq: ProteinSequence, model: PwmModel, k: int, l: int) -> np.ndarray:
    """Score every k-mer window of the padded sequence under the PWM.

    Output dimension is l-k+1; PAD positions contribute zero.
    """
    if model.k != k:
        raise EmbeddingError(f"model k={model.k} does not match k={k}")
    n = len(seq)
    if n > l:
        raise EmbeddingError(
            f"sequence {seq.id} length {n} exceeds padded length {l}")
    if l < k:
        raise EmbeddingError(f"padded length {l} shorter than k={k}")
    codes = _codes(seq)
    vec = np.zeros(l - k + 1)
    per_offset = model.pwm[codes]           # n x k; PAD rows are implicit zeros
    for i in range(k):
        contrib = np.zeros(l)
        contrib[:n] = per_offset[:, i]
        vec += contrib[i:l - k + 1 + i]
    return vec


# --- string kernel -------------------------------------------------------------


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    n: int


def _pair_kernel(codes_a, kmers_a, codes_b, kmers_b, k: int, m: int) -> float:
    """Count k-mer pairs with at most m mismatches. Exact, no hashing."""
    if m == 0:
        # multiset inner product via sorted intersection
        ua, ca = np.unique(kmers_a, return_counts=True)
        ub, cb = np.unique(kmers_b, return_counts=True)
        ia = np.isin(ua, ub)
        ub_index = {v: i for i, v in enumerate(ub)}
        total = 0
        for v, c in zip(ua[ia], ca[ia]):
            total += c * cb[ub_index[v]]
        return float(total)
    # m == 1: compare every window pair positionwise
    wa = np.lib.stride_tricks.sliding_window_view(codes_a, k)
    wb = np.lib.stride_tricks.sliding_window_view(codes_b, k)
    mismatches = (wa[:, None, :] != wb[None, :, :]).sum(axis=2)
    return float((mismatches <= m).sum())


def string_kernel_gram(corpus: Corpus, k: int = 3, m: int = 0) -> GramMatrix:
    """Exact match/mismatch k-mer kernel over all sequence pairs."""
    if m not in (0, 1):
        raise EmbeddingError(f"mismatch budget m={m} not in {{0, 1}}")
    n = len(corpus)
    codes = [_codes(s) for s in corpus.sequences]
    kmers = [kmer_codes(s, k) for s in corpus.sequences]
    gram = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            val = _pair_kernel(codes[a], kmers[a], codes[b], kmers[b], k, m)
            gram[a, b] = gram[b, a] = val
    return GramMatrix(gram, n)


def kernel_pca(gram: GramMatrix, p: int) -> np.ndarray:
    """Project onto the top-p components of the double-centred Gram matrix.

    Column c of the result is the unit eigenvector scaled by sqrt of its
    eigenvalue, i.e. the conventional kernel-PCA coordinates. Components
    with eigenvalue <= EIG_DROP_FACTOR x the largest are dropped; if fewer
    than p survive a warning is issued and fewer columns are returned.
    """
    kmat = gram.values
    if kmat.shape[0] != kmat.shape[1] or not np.allclose(kmat, kmat.T):
        raise EmbeddingError("gram matrix must be square and symmetric")
    n = kmat.shape[0]
    if p > n:
        raise EmbeddingError(f"p={p} exceeds corpus size {n}")
    ones = np.full((n, n), 1.0 / n)
    centred = kmat - ones @ kmat - kmat @ ones + ones @ kmat @ ones
    eigvals, eigvecs = np.linalg.eigh(centred)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    cutoff = EIG_DROP_FACTOR * max(eigvals[0], 0.0)
    keep = eigvals > cutoff
    if keep.sum() < p:
        warnings.warn(
            f"only {int(keep.sum())} positive components available, "
            f"requested {p}; returning fewer columns")
        p = int(keep.sum())
    return eigvecs[:, :p] * np.sqrt(eigvals[:p])


# --- corpus-level embedding ----------------------------------------------------

METHODS = ("ohe", "spike2vec", "pwm2vec", "stringkernel")

DEFAULT_K = {"ohe": 0, "spike2vec": 3, "pwm2vec": 9, "stringkernel": 3}


def embed_corpus(corpus: Corpus, method: str, k: Optional[int] = None,
                 components: int = 500, mismatches: int = 0) -> tuple[np.ndarray, dict]:
    """Encode every sequence; returns (matrix, descriptor)."""
    if method not in METHODS:
        raise EmbeddingError(
            f"unknown embedding method {method!r}; valid: {', '.join(METHODS)}")
    if k is None:
        k = DEFAULT_K[method]
    l = corpus.effective_len
    if method == "ohe":
        x = np.stack([one_hot_encode(s, l) for s in corpus.sequences])
    elif method == "spike2vec":
        x = np.stack([spike2vec(s, k) for s in corpus.sequences])
    elif method == "pwm2vec":
        x = np.stack([pwm2vec(s, build_pwm(s, k), k, l)
                      for s in corpus.sequences])
    else:
        gram = string_kernel_gram(corpus, k, mismatches)
        p = min(components, gram.n)
        x = kernel_pca(gram, p)
    descriptor = {"method": method, "k": k, "dim": int(x.shape[1]),
                  "pad_len": l}
    return x, descriptor
