"""Variable-length bitstring genomes.

A genome is a flat array of 0/1 values.  The leading ``code_length`` bits
encode the individual's own mutation rate; the remainder is the phenotype
that gets scored against the target string.
"""

from dataclasses import dataclass, field

import numpy as np

# Bitstrings are plain uint8 arrays of 0/1 values.
BitString = np.ndarray

MAX_CODE_LENGTH = 62  # decoded integer must fit in int64


def bits_from_string(s: str) -> BitString:
    """Parse '0'/'1' characters (spaces ignored) into a bit array."""
    s = s.replace(" ", "")
    if not all(c in "01" for c in s):
        raise ValueError(f"not a bitstring: {s!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def bits_to_string(bits: BitString) -> str:
    return "".join("1" if b else "0" for b in bits)


@dataclass(eq=False)
class Genome:
    """A bitstring plus the birth at which it entered the population.

    ``birth_index`` is 0 for founding individuals and the 1-based birth
    number for everyone since; replacement uses it to break fitness ties.
    """

    bits: BitString
    birth_index: int = 0

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1:
            raise ValueError("genome bits must be one-dimensional")

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __repr__(self) -> str:
        shown = bits_to_string(self.bits[:40])
        if len(self) > 40:
            shown += "..."
        return f"Genome({shown}, len={len(self)}, birth={self.birth_index})"

    def copy(self) -> "Genome":
        return Genome(self.bits.copy(), self.birth_index)


def random_genome(length: int, rng: np.random.Generator, birth_index: int = 0) -> Genome:
    """Uniform random genome of the given length."""
    if length < 1:
        raise ValueError("genome length must be >= 1")
    return Genome(rng.integers(0, 2, size=length, dtype=np.uint8), birth_index)


def _check_code_length(n_bits: int, code_length: int):
    if not 1 <= code_length <= MAX_CODE_LENGTH:
        raise ValueError(f"code_length must be in 1..{MAX_CODE_LENGTH}")
    if n_bits < code_length:
        raise ValueError(f"genome shorter ({n_bits}) than code_length ({code_length})")


def decode_mutation_rate(genome, code_length: int) -> float:
    """Mutation rate encoded in the leading code bits.

    The code is read as an unsigned integer, most significant bit first, and
    scaled by 1 / (2^code_length - 1), so all-zeros decodes to 0.0 and
    all-ones to 1.0.
    """
    bits = getattr(genome, "bits", genome)
    bits = np.asarray(bits, dtype=np.uint8)
    _check_code_length(bits.shape[0], code_length)
    weights = np.left_shift(1, np.arange(code_length - 1, -1, -1))
    value = int(bits[:code_length].astype(np.int64) @ weights)
    return value / ((1 << code_length) - 1)


def phenotype(genome, code_length: int) -> BitString:
    """The genome body past the mutation code; scored against the target."""
    bits = getattr(genome, "bits", genome)
    bits = np.asarray(bits, dtype=np.uint8)
    _check_code_length(bits.shape[0], code_length)
    return bits[code_length:].copy()
