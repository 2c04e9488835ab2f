"""Evaluation ledger, memoized scoring, and nearest-neighbor queries.

The ledger is the single source of truth for which genotypes have been
scored. All other modules treat it (or a frozen view of it) as an
immutable snapshot per loop iteration; only ``evaluate`` mutates it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import BudgetExhausted, EmptyLedger

PAIR_SAMPLE_LIMIT = 1000  # pairs sampled when scaling the blended metric


@dataclass(frozen=True)
class ScoredSample:
    """One evaluated genotype with its memoized score."""

    id: int
    genotype: Any
    score: float
    eval_order: int


@dataclass(frozen=True)
class DistanceMetric:
    """Selector for the genotype-space metric.

    ``kind`` is one of ``genotypic``, ``phenotypic``, ``blended``;
    ``lam`` is the genotypic weight of the blend (lam=1 is purely
    genotypic, lam=0 purely phenotypic).
    """

    kind: str = "blended"
    lam: float = 0.5

    def __post_init__(self):
        if self.kind not in ("genotypic", "phenotypic", "blended"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("blend weight must lie in [0, 1]")

    @staticmethod
    def genotypic() -> "DistanceMetric":
        return DistanceMetric("genotypic")

    @staticmethod
    def phenotypic() -> "DistanceMetric":
        return DistanceMetric("phenotypic")

    @staticmethod
    def blended(lam: float = 0.5) -> "DistanceMetric":
        return DistanceMetric("blended", lam)


class EvaluationLedger:
    """Append-only record of evaluated genotypes with a hard budget."""

    def __init__(self, budget: int):
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        self.budget = budget
        self.samples: list[ScoredSample] = []
        self._by_key: dict[Any, ScoredSample] = {}

    @property
    def eval_count(self) -> int:
        return len(self.samples)

    @property
    def remaining(self) -> int:
        return self.budget - self.eval_count

    def lookup(self, key: Any) -> ScoredSample | None:
        return self._by_key.get(key)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class PopulationView:
    """Frozen subset of a ledger used as the population S_n.

    Distribution coordinates elsewhere in the package index positions
    in ``samples``, not global genotype ids.
    """

    samples: tuple[ScoredSample, ...]
    pos_by_id: dict[int, int] = field(repr=False, default_factory=dict)

    @staticmethod
    def of(samples: Sequence[ScoredSample]) -> "PopulationView":
        samples = tuple(samples)
        return PopulationView(samples, {s.id: i for i, s in enumerate(samples)})

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def scores(self) -> np.ndarray:
        return np.array([s.score for s in self.samples], dtype=float)


def view_of(ledger: EvaluationLedger, cap: int | None = None) -> PopulationView:
    """Snapshot the ledger, keeping at most ``cap`` best-scoring samples.

    The kept samples are ordered by ascending id so coordinates are
    stable for a given membership set.
    """
    samples = ledger.samples
    if cap is not None and len(samples) > cap:
        ranked = sorted(samples, key=lambda s: (-s.score, s.id))[:cap]
        samples = sorted(ranked, key=lambda s: s.id)
    return PopulationView.of(samples)


def evaluate(genotype, problem, ledger: EvaluationLedger) -> ScoredSample:
    """Score a genotype, memoizing by canonical form.

    A cached genotype is returned without consuming budget.
    """
    key = problem.canonical_key(genotype)
    cached = ledger.lookup(key)
    if cached is not None:
        return cached
    if ledger.eval_count >= ledger.budget:
        raise BudgetExhausted(
            f"budget of {ledger.budget} evaluations exhausted"
        )
    sample = ScoredSample(
        id=len(ledger.samples),
        genotype=genotype,
        score=float(problem.score(genotype)),
        eval_order=ledger.eval_count,
    )
    ledger.samples.append(sample)
    ledger._by_key[key] = sample
    return sample


def best_score(population) -> float:
    """Maximum score over the ledger or view."""
    if len(population.samples) == 0:
        raise EmptyLedger("best_score on empty ledger")
    return max(s.score for s in population.samples)


def best_sample(population) -> ScoredSample:
    if len(population.samples) == 0:
        raise EmptyLedger("best_sample on empty ledger")
    return max(population.samples, key=lambda s: (s.score, -s.id))


class ResolvedMetric:
    """A DistanceMetric bound to a problem and a population snapshot.

    Precomputes per-sample behavior vectors and, for the blended kind,
    median scales over a deterministic sample of ledger pairs so the
    genotypic and phenotypic terms are comparable.
    """

    def __init__(self, problem, population, metric: DistanceMetric):
        self.problem = problem
        self.metric = metric
        self.samples = tuple(population.samples)
        self._genos = [s.genotype for s in self.samples]
        self._behaviors = None
        if metric.kind in ("phenotypic", "blended"):
            self._behaviors = np.array(
                [problem.behavior(s.genotype) for s in self.samples], dtype=float
            )
        self._geno_scale = 1.0
        self._pheno_scale = 1.0
        if metric.kind == "blended":
            self._geno_scale, self._pheno_scale = self._median_scales()

    def _median_scales(self) -> tuple[float, float]:
        n = len(self.samples)
        if n < 2:
            return 1.0, 1.0
        rng = np.random.default_rng(0xC0FFEE)
        total = n * (n - 1) // 2
        if total <= PAIR_SAMPLE_LIMIT:
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        else:
            ii = rng.integers(0, n, size=2 * PAIR_SAMPLE_LIMIT)
            jj = rng.integers(0, n, size=2 * PAIR_SAMPLE_LIMIT)
            pairs = [(int(i), int(j)) for i, j in zip(ii, jj) if i != j][
                :PAIR_SAMPLE_LIMIT
            ]
        dg = [self.problem.d_geno(self._genos[i], self._genos[j]) for i, j in pairs]
        bp = self._behaviors
        dp = [float(np.linalg.norm(bp[i] - bp[j])) for i, j in pairs]
        mg = float(np.median(dg))
        mp = float(np.median(dp))
        return (mg if mg > 0 else 1.0), (mp if mp > 0 else 1.0)

    def to_all(self, x) -> np.ndarray:
        """Distances from genotype x to every sample in the snapshot."""
        kind = self.metric.kind
        if kind in ("genotypic", "blended"):
            dg = self.problem.geno_distances(x, self._genos)
        if kind in ("phenotypic", "blended"):
            bx = np.asarray(self.problem.behavior(x), dtype=float)
            dp = np.linalg.norm(self._behaviors - bx[None, :], axis=1)
        if kind == "genotypic":
            return dg
        if kind == "phenotypic":
            return dp
        lam = self.metric.lam
        # blend extremes must reduce to the pure metrics exactly
        if lam == 1.0:
            return dg
        if lam == 0.0:
            return dp
        return lam * dg / self._geno_scale + (1 - lam) * dp / self._pheno_scale

    def pair(self, a, b) -> float:
        kind = self.metric.kind
        if kind in ("genotypic", "blended"):
            dg = self.problem.d_geno(a, b)
        if kind in ("phenotypic", "blended"):
            ba = np.asarray(self.problem.behavior(a), dtype=float)
            bb = np.asarray(self.problem.behavior(b), dtype=float)
            dp = float(np.linalg.norm(ba - bb))
        if kind == "genotypic":
            return dg
        if kind == "phenotypic":
            return dp
        lam = self.metric.lam
        if lam == 1.0:
            return dg
        if lam == 0.0:
            return dp
        return lam * dg / self._geno_scale + (1 - lam) * dp / self._pheno_scale


def knn(
    x,
    population,
    k: int,
    rm: ResolvedMetric,
) -> list[tuple[ScoredSample, float]]:
    """The min(k, n) nearest evaluated samples to x, ascending by distance.

    Ties break toward the smaller genotype id.
    """
    samples = population.samples
    if len(samples) == 0:
        raise EmptyLedger("knn on empty ledger")
    if k < 1:
        raise ValueError("k must be positive")
    dists = np.asarray(rm.to_all(x), dtype=float)
    ids = np.array([s.id for s in samples])
    order = np.lexsort((ids, dists))[: min(k, len(samples))]
    return [(samples[i], float(dists[i])) for i in order]
