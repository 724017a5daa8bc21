"""Sequence ingestion, validation, padding, statistics and synthesis.

A corpus can come from a FASTA file (labels in the header after '|', or in
a sidecar CSV) or from the synthetic lineage generator, which applies a
mutation signature to a reference sequence and sprinkles i.i.d.
substitution noise on top. No indels are simulated, so every synthetic
sequence stays aligned with its reference.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .alphabet import ALPHABET, PAD


class SequenceError(ValueError):
    """Malformed FASTA input, invalid residues, or bad generator config."""


@dataclass(frozen=True)
class ProteinSequence:
    id: str
    residues: str
    label: Optional[str] = None

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class Corpus:
    """Immutable bag of validated sequences.

    ``pad_len`` is None for an unpadded corpus. Padding is conceptual: the
    stored residues are never modified, ``padded_residues`` appends the PAD
    sentinel on the way out.
    """

    sequences: tuple[ProteinSequence, ...]
    label_vocab: tuple[str, ...]
    max_len: int
    pad_len: Optional[int] = None

    def __len__(self) -> int:
        return len(self.sequences)

    def padded_residues(self, seq: ProteinSequence) -> str:
        if self.pad_len is None:
            return seq.residues
        return seq.residues + PAD * (self.pad_len - len(seq.residues))

    @property
    def effective_len(self) -> int:
        return self.max_len if self.pad_len is None else self.pad_len


def make_corpus(sequences: Iterable[ProteinSequence],
                pad_len: Optional[int] = None) -> Corpus:
    seqs = tuple(sequences)
    if not seqs:
        return Corpus(seqs, (), 0, pad_len)
    vocab: list[str] = []
    for s in seqs:
        if s.label is not None and s.label not in vocab:
            vocab.append(s.label)
    return Corpus(seqs, tuple(vocab), max(len(s) for s in seqs), pad_len)


def _validate(record_id: str, residues: str) -> None:
    if not residues:
        raise SequenceError(f"record {record_id}: empty sequence body")
    off = ALPHABET.first_invalid(residues)
    if off >= 0:
        raise SequenceError(
            f"record {record_id}: residue {residues[off]!r} at offset {off} "
            f"is not in the 21-symbol alphabet")


def parse_fasta(stream) -> Corpus:
    """Parse FASTA text (string, path-opened file, or line iterable).

    Header format: ``>id`` or ``>id|label``. Multi-line bodies are
    concatenated; CRLF is tolerated.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    sequences: list[ProteinSequence] = []
    rec_id: Optional[str] = None
    label: Optional[str] = None
    body: list[str] = []

    def flush():
        if rec_id is None:
            return
        residues = "".join(body)
        _validate(rec_id, residues)
        sequences.append(ProteinSequence(rec_id, residues, label))

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith(">"):
            flush()
            header = line[1:].strip()
            if not header:
                raise SequenceError(f"line {lineno}: empty FASTA header")
            rec_id, _, rest = header.partition("|")
            label = rest if rest else None
            body = []
        else:
            if rec_id is None:
                raise SequenceError(
                    f"line {lineno}: sequence data before any '>' header")
            body.append(line.strip())
    flush()
    return make_corpus(sequences)


def write_fasta(corpus: Corpus, out) -> None:
    """Inverse of parse_fasta; labels re-emitted after '|'."""
    own = isinstance(out, (str, Path))
    fh = open(out, "w") if own else out
    try:
        for s in corpus.sequences:
            header = s.id if s.label is None else f"{s.id}|{s.label}"
            fh.write(f">{header}\n{s.residues}\n")
    finally:
        if own:
            fh.close()


def load_labels_csv(path) -> dict[str, str]:
    """Sidecar label file with header ``id,label``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                [f.strip() for f in reader.fieldnames[:2]] != ["id", "label"]:
            raise SequenceError(f"{path}: expected header 'id,label'")
        return {row["id"]: row["label"] for row in reader}


def apply_labels(corpus: Corpus, labels: dict[str, str]) -> Corpus:
    seqs = [replace(s, label=labels.get(s.id, s.label))
            for s in corpus.sequences]
    return make_corpus(seqs, pad_len=corpus.pad_len)


def pad_corpus(corpus: Corpus, target_len: int) -> Corpus:
    """Mark the corpus as padded to ``target_len`` with the PAD sentinel."""
    if target_len < corpus.max_len:
        raise SequenceError(
            f"target_len {target_len} < corpus max_len {corpus.max_len}")
    return replace(corpus, pad_len=target_len)


def corpus_stats(corpus: Corpus) -> dict:
    """Min/max/mean residue length, overall and per label."""
    if not corpus.sequences:
        raise SequenceError("empty corpus has no statistics")

    def stats(lengths: list[int]) -> dict:
        return {"min": min(lengths), "max": max(lengths),
                "mean": sum(lengths) / len(lengths), "count": len(lengths)}

    out = {"overall": stats([len(s) for s in corpus.sequences]),
           "per_label": {}}
    for label in corpus.label_vocab:
        out["per_label"][label] = stats(
            [len(s) for s in corpus.sequences if s.label == label])
    return out


# --- synthetic lineage generation -------------------------------------------

_EDIT_RE = re.compile(r"^([A-Z])(\d+)([A-Z])$")


@dataclass(frozen=True)
class MutationSignature:
    """Named set of point substitutions, positions 1-based."""

    lineage: str
    edits: tuple[tuple[int, str, str], ...]

    def __post_init__(self):
        positions = [p for p, _, _ in self.edits]
        if len(set(positions)) != len(positions):
            raise SequenceError(
                f"signature {self.lineage}: duplicate edit positions")
        for pos, frm, to in self.edits:
            if pos < 1:
                raise SequenceError(
                    f"signature {self.lineage}: positions are 1-based, "
                    f"got {pos}")
            if frm == to:
                raise SequenceError(
                    f"signature {self.lineage}: edit at {pos} is a no-op")

    @classmethod
    def from_notation(cls, lineage: str, edits: Iterable[str]) -> "MutationSignature":
        """Build from strings like 'S13I' (S at position 13 becomes I)."""
        parsed = []
        for e in edits:
            m = _EDIT_RE.match(e)
            if not m:
                raise SequenceError(
                    f"signature {lineage}: bad edit notation {e!r}")
            parsed.append((int(m.group(2)), m.group(1), m.group(3)))
        return cls(lineage, tuple(parsed))

    def edit_set(self) -> frozenset:
        return frozenset(self.edits)


def _check_signature(reference: ProteinSequence, sig: MutationSignature) -> None:
    for pos, frm, to in sig.edits:
        if pos < 1 or pos > len(reference):
            raise SequenceError(
                f"signature {sig.lineage}: position {pos} outside "
                f"reference of length {len(reference)}")
        if reference.residues[pos - 1] != frm:
            raise SequenceError(
                f"signature {sig.lineage}: reference has "
                f"{reference.residues[pos - 1]!r} at position {pos}, "
                f"edit expects {frm!r}")
        if to not in ALPHABET:
            raise SequenceError(
                f"signature {sig.lineage}: target residue {to!r} at "
                f"position {pos} not in alphabet")


def synth_lineages(reference: ProteinSequence,
                   signatures: list[MutationSignature],
                   per_class: int,
                   noise_rate: float,
                   seed: int) -> Corpus:
    """Generate ``per_class`` noisy variants of the reference per signature.

    Noise is an independent per-position substitution at ``noise_rate``,
    uniform over the 20 symbols other than the current residue.
    Deterministic given the seed.
    """
    if not 0 <= noise_rate < 1:
        raise SequenceError(f"noise_rate {noise_rate} outside [0, 1)")
    _validate(reference.id, reference.residues)
    for sig in signatures:
        _check_signature(reference, sig)

    rng = np.random.default_rng(seed)
    ref_codes = ALPHABET.encode(reference.residues).astype(np.int64)
    n_sym = len(ALPHABET)
    sequences: list[ProteinSequence] = []
    for sig in signatures:
        base = ref_codes.copy()
        for pos, _, to in sig.edits:
            base[pos - 1] = ALPHABET.index_of[to]
        for j in range(per_class):
            codes = base.copy()
            if noise_rate > 0:
                flip = rng.random(codes.size) < noise_rate
                # uniform over the other 20 symbols: draw 0..19 and skip
                # the current residue's index
                draw = rng.integers(0, n_sym - 1, size=codes.size)
                idx = np.nonzero(flip)[0]
                repl = draw[idx] + (draw[idx] >= codes[idx])
                codes[idx] = repl
            residues = "".join(ALPHABET.symbols[c] for c in codes)
            sequences.append(ProteinSequence(
                f"{sig.lineage}_{j:04d}", residues, sig.lineage))
    return make_corpus(sequences)


def load_synth_config(path) -> dict:
    """Generator config: reference FASTA path, signatures in edit notation.

    Schema::

        {"reference": path, "signatures": [{"lineage": str,
         "edits": ["S13I", ...]}], "per_class": int,
         "noise_rate": float, "seed": int}
    """
    with open(path) as fh:
        raw = json.load(fh)
    for key in ("reference", "signatures", "per_class", "noise_rate", "seed"):
        if key not in raw:
            raise SequenceError(f"synth config: missing field {key!r}")
    return raw


def run_synth_config(cfg: dict, base_dir: Optional[Path] = None) -> Corpus:
    ref_path = Path(cfg["reference"])
    if base_dir is not None and not ref_path.is_absolute():
        ref_path = base_dir / ref_path
    with open(ref_path) as fh:
        ref_corpus = parse_fasta(fh)
    if len(ref_corpus) != 1:
        raise SequenceError(
            f"reference FASTA must hold exactly one sequence, "
            f"got {len(ref_corpus)}")
    signatures = [MutationSignature.from_notation(s["lineage"], s["edits"])
                  for s in cfg["signatures"]]
    return synth_lineages(ref_corpus.sequences[0], signatures,
                          int(cfg["per_class"]), float(cfg["noise_rate"]),
                          int(cfg["seed"]))


def random_reference(length: int, seed: int, seq_id: str = "ref") -> ProteinSequence:
    """Seeded random reference over the 20 unambiguous residues."""
    rng = np.random.default_rng(seed)
    symbols = ALPHABET.symbols.replace("X", "")
    codes = rng.integers(0, len(symbols), size=length)
    return ProteinSequence(seq_id, "".join(symbols[c] for c in codes))
