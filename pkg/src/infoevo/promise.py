"""Promise estimation over the evaluated population.

The promise of a sample blends its (normalized) score with two heuristic
ratios: how well it dominates its local neighborhood and how close it
comes to the best score seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ResolvedMetric, knn
from .errors import EmptyLedger, LedgerTooSmall


@dataclass(frozen=True)
class PromiseWeights:
    w_zeta: float = 1.0
    w_lm: float = 0.5
    w_gm: float = 0.5
    k_local: int = 5
    sharpness: float = 1.0  # exponent applied to the two heuristic ratios

    def __post_init__(self):
        if min(self.w_zeta, self.w_lm, self.w_gm) < 0:
            raise ValueError("promise weights must be nonnegative")
        if self.w_zeta + self.w_lm + self.w_gm <= 0:
            raise ValueError("at least one promise weight must be positive")
        if self.k_local < 1:
            raise ValueError("k_local must be positive")


@dataclass(frozen=True)
class PromiseVector:
    """Promise values over the population, indexed like the view samples."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def normalize_scores(population) -> np.ndarray:
    """Min-max rescaling of scores to [0, 1]; all-equal ledgers map to 1."""
    if len(population.samples) == 0:
        raise EmptyLedger("normalize_scores on empty ledger")
    scores = np.array([s.score for s in population.samples], dtype=float)
    lo, hi = scores.min(), scores.max()
    if hi == lo:
        return np.ones_like(scores)
    return (scores - lo) / (hi - lo)


def local_max_prob(
    i: int,
    population,
    k_local: int,
    rm: ResolvedMetric,
    norm: np.ndarray | None = None,
) -> float:
    """How close sample i comes to dominating its k nearest neighbors.

    The ratio of its normalized score to the max over the neighborhood
    including itself; 1 iff it ties or beats every neighbor.
    """
    if len(population.samples) < 2:
        raise LedgerTooSmall("local_max_prob needs at least 2 samples")
    if norm is None:
        norm = normalize_scores(population)
    sample = population.samples[i]
    neighbors = knn(sample.genotype, population, k_local + 1, rm)
    hood = [norm[population.pos_by_id[s.id]] for s, _ in neighbors if s.id != sample.id]
    hood = hood[:k_local]
    denom = max([norm[i]] + hood)
    if denom <= 0:
        return 1.0
    return float(norm[i] / denom)


def global_max_prob(i: int, population, norm: np.ndarray | None = None) -> float:
    """Ratio of sample i's normalized score to the population maximum."""
    if norm is None:
        norm = normalize_scores(population)
    denom = norm.max()
    if denom <= 0:
        return 1.0
    return float(norm[i] / denom)


def promise_vector(
    population,
    weights: PromiseWeights,
    rm: ResolvedMetric,
) -> PromiseVector:
    """Weighted blend of normalized score and the two heuristic ratios."""
    if len(population.samples) == 0:
        raise EmptyLedger("promise_vector on empty ledger")
    n = len(population.samples)
    norm = normalize_scores(population)
    values = weights.w_zeta * norm
    if weights.w_gm > 0:
        gm = np.array([global_max_prob(i, population, norm) for i in range(n)])
        values = values + weights.w_gm * gm**weights.sharpness
    if weights.w_lm > 0 and n >= 2:
        lm = np.array(
            [local_max_prob(i, population, weights.k_local, rm, norm) for i in range(n)]
        )
        values = values + weights.w_lm * lm**weights.sharpness
    elif weights.w_lm > 0:
        values = values + weights.w_lm
    if values.max() <= 0:
        # degenerate ledger (single sample at the score floor): fall back
        # to uniform promise so a distribution can still be formed
        values = np.ones(n)
    return PromiseVector(values)
