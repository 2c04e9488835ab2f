"""Bitstring benchmarks: OneMax and the concatenated 5-bit trap."""

from __future__ import annotations

import numpy as np

from ..errors import BadLength
from .base import Problem


def score_onemax(bits: np.ndarray) -> float:
    return float(np.sum(bits))


def score_trap(bits: np.ndarray, block: int = 5) -> float:
    """Per block: full block of ones scores the block size, else it scores
    block-1 minus the ones count (deceptive gradient toward all zeros)."""
    if len(bits) % block != 0:
        raise BadLength(f"bit length {len(bits)} not divisible by block {block}")
    total = 0.0
    for start in range(0, len(bits), block):
        ones = int(np.sum(bits[start : start + block]))
        total += block if ones == block else (block - 1) - ones
    return total


class BitstringProblem(Problem):
    def __init__(self, bits: int):
        if bits < 1:
            raise BadLength("bit length must be positive")
        self.dimension = bits

    def canonical_key(self, genotype) -> bytes:
        return np.asarray(genotype, dtype=np.uint8).tobytes()

    def random_genotype(self, rng):
        return rng.integers(0, 2, size=self.dimension, dtype=np.uint8)

    def mutate(self, genotype, rate, rng):
        flips = rng.random(self.dimension) < rate
        out = np.asarray(genotype, dtype=np.uint8).copy()
        out[flips] ^= 1
        return out

    def crossover(self, a, b, rng):
        mask = rng.random(self.dimension) < 0.5
        return np.where(mask, a, b).astype(np.uint8)

    def loci(self, genotype):
        return [int(v) for v in genotype]

    def from_loci(self, values, rng):
        return np.asarray(values, dtype=np.uint8)

    def locus_alphabet(self, locus):
        return (0, 1)

    def d_geno(self, a, b) -> float:
        return float(np.sum(np.asarray(a) != np.asarray(b)))

    def geno_distances(self, x, genotypes) -> np.ndarray:
        mat = np.asarray(genotypes, dtype=np.uint8)
        return np.sum(mat != np.asarray(x, dtype=np.uint8)[None, :], axis=1).astype(
            float
        )

    def render(self, genotype) -> str:
        return "".join(str(int(b)) for b in genotype)

    def default_mutation_rate(self) -> float:
        return max(1.0 / self.dimension, 0.01)


class OneMax(BitstringProblem):
    def __init__(self, bits: int = 50):
        super().__init__(bits)
        self.name = f"onemax-{bits}"
        self.target = float(bits)

    def score(self, genotype) -> float:
        return score_onemax(np.asarray(genotype))


class Trap5(BitstringProblem):
    def __init__(self, bits: int = 30, block: int = 5):
        if bits % block != 0:
            raise BadLength(f"bit length {bits} not divisible by block {block}")
        super().__init__(bits)
        self.block = block
        self.name = f"trap{block}-{bits}"
        self.target = float(bits)

    def score(self, genotype) -> float:
        return score_trap(np.asarray(genotype), self.block)
