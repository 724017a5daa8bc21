"""The 21-symbol amino-acid alphabet shared by every pipeline stage."""

from __future__ import annotations

import numpy as np

# 20 standard amino acids plus the ambiguity code 'X'. 'X' is a first-class
# member, not an error: real spike extracts contain it.
AMINO_ACIDS: str = "ACDEFGHIKLMNPQRSTVWXY"

# Padding sentinel. Deliberately outside the alphabet so that padded
# positions encode as all-zero blocks and contribute nothing to any
# embedding.
PAD: str = "-"

# Sense-codon counts from the standard genetic code (61 sense codons total).
# 'X' has no codon; it gets a 1/61 floor as background probability.
SENSE_CODON_COUNTS: dict[str, int] = {
    "A": 4, "C": 2, "D": 2, "E": 2, "F": 2, "G": 4, "H": 2, "I": 3,
    "K": 2, "L": 6, "M": 1, "N": 2, "P": 4, "Q": 2, "R": 6, "S": 6,
    "T": 4, "V": 4, "W": 1, "Y": 2,
}

N_SENSE_CODONS = 61

assert sum(SENSE_CODON_COUNTS.values()) == N_SENSE_CODONS


class Alphabet:
    """Fixed ordered residue alphabet with O(1) symbol -> index lookup."""

    def __init__(self, symbols: str = AMINO_ACIDS):
        if len(set(symbols)) != len(symbols):
            raise ValueError("alphabet symbols must be distinct")
        self.symbols = symbols
        self.index_of = {c: i for i, c in enumerate(symbols)}
        # byte lookup table for vectorised encoding; 255 marks invalid
        self._lut = np.full(256, 255, dtype=np.uint8)
        for i, c in enumerate(symbols):
            self._lut[ord(c)] = i

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, c: str) -> bool:
        return c in self.index_of

    def encode(self, residues: str) -> np.ndarray:
        """Map a residue string to an index array. PAD maps to 255."""
        raw = np.frombuffer(residues.encode("ascii"), dtype=np.uint8)
        return self._lut[raw]

    def first_invalid(self, residues: str) -> int:
        """Offset of the first character outside the alphabet, or -1.

        The PAD sentinel counts as invalid here; validation happens before
        padding.
        """
        codes = self.encode(residues)
        bad = np.nonzero(codes == 255)[0]
        return int(bad[0]) if bad.size else -1

    def background(self, c: str) -> float:
        """Background residue probability n(c)/61 from sense-codon counts."""
        if c == "X":
            return 1.0 / N_SENSE_CODONS
        return SENSE_CODON_COUNTS[c] / N_SENSE_CODONS


ALPHABET = Alphabet()
