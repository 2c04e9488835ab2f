import numpy as np
import pytest

from infoevo.core import DistanceMetric, ResolvedMetric, view_of
from infoevo.errors import EmptyLedger, LedgerTooSmall
from infoevo.promise import (
    PromiseWeights,
    global_max_prob,
    local_max_prob,
    normalize_scores,
    promise_vector,
)

from conftest import make_scalar_ledger


def scalar_setup(values):
    problem, ledger = make_scalar_ledger(values)
    view = view_of(ledger)
    rm = ResolvedMetric(problem, view, DistanceMetric.genotypic())
    return view, rm


def test_normalize_scores_affine():
    view, _ = scalar_setup([-2.0, 0.0, 2.0])
    assert np.allclose(normalize_scores(view), [0.0, 0.5, 1.0])


def test_normalize_scores_degenerate():
    view, _ = scalar_setup([7.0, 7.0000])
    assert np.allclose(normalize_scores(view), [1.0, 1.0])


def test_normalize_scores_two_points():
    view, _ = scalar_setup([0.0, 10.0])
    assert np.allclose(normalize_scores(view), [0.0, 1.0])


def test_normalize_scores_empty():
    view, _ = scalar_setup([1.0])
    from infoevo.core import PopulationView

    with pytest.raises(EmptyLedger):
        normalize_scores(PopulationView.of([]))


def test_local_max_prob_dominant_sample():
    # genotype value == score, so 9.0 dominates its neighborhood
    view, rm = scalar_setup([1.0, 2.0, 9.0])
    assert local_max_prob(2, view, 2, rm) == 1.0


def test_local_max_prob_direct_ratio():
    # normalized scores 0, 0.5, 1; the middle sample's best neighbor is 1.0
    view, rm = scalar_setup([0.0, 5.0, 10.0])
    assert local_max_prob(1, view, 2, rm) == pytest.approx(0.5)


class EqualScoreProblem:
    """Distinct genotypes, identical scores."""

    target = None

    def score(self, genotype):
        return 3.0

    def canonical_key(self, genotype):
        return float(genotype)

    def d_geno(self, a, b):
        return abs(a - b)

    def geno_distances(self, x, genotypes):
        return np.array([abs(x - g) for g in genotypes])

    def behavior(self, genotype):
        return np.array([3.0])


def test_local_max_prob_all_equal():
    from infoevo.core import EvaluationLedger, evaluate, view_of

    problem = EqualScoreProblem()
    ledger = EvaluationLedger(budget=5)
    for v in (0.0, 1.0, 2.0):
        evaluate(v, problem, ledger)
    view = view_of(ledger)
    rm = ResolvedMetric(problem, view, DistanceMetric.genotypic())
    for i in range(3):
        assert local_max_prob(i, view, 2, rm) == 1.0


def test_local_max_prob_needs_two_samples():
    view, rm = scalar_setup([1.0])
    with pytest.raises(LedgerTooSmall):
        local_max_prob(0, view, 1, rm)


def test_global_max_prob():
    view, _ = scalar_setup([0.0, 5.0, 10.0])
    assert global_max_prob(2, view) == 1.0
    assert global_max_prob(1, view) == pytest.approx(0.5)
    assert global_max_prob(0, view) == 0.0


def test_promise_vector_score_only_reduction():
    view, rm = scalar_setup([3.0, 8.0, 1.0])
    pv = promise_vector(view, PromiseWeights(w_zeta=1, w_lm=0, w_gm=0), rm)
    assert np.allclose(pv.values, normalize_scores(view))
    assert int(np.argmax(pv.values)) == int(np.argmax(view.scores))


def test_promise_vector_gm_only():
    view, rm = scalar_setup([0.0, 5.0, 10.0])
    pv = promise_vector(view, PromiseWeights(w_zeta=0, w_lm=0, w_gm=1), rm)
    assert int(np.argmax(pv.values)) == 2
    assert pv.values[2] == pytest.approx(1.0)


def test_promise_vector_hand_derived():
    # normalized scores (0, 0.5, 1); weights (1, 0, 1):
    # values = norm + norm/max(norm) = (0, 1.0, 2.0)
    view, rm = scalar_setup([0.0, 5.0, 10.0])
    pv = promise_vector(view, PromiseWeights(w_zeta=1, w_lm=0, w_gm=1), rm)
    assert np.allclose(pv.values, [0.0, 1.0, 2.0])


def test_promise_argmax_invariance_random(rng):
    for _ in range(100):
        scores = rng.uniform(-5, 5, size=8)
        view, rm = scalar_setup(list(scores))
        pv = promise_vector(view, PromiseWeights(w_zeta=2.5, w_lm=0, w_gm=0), rm)
        assert int(np.argmax(pv.values)) == int(np.argmax(view.scores))


def test_promise_monotone_in_own_score(rng):
    base_scores = [1.0, 4.0, 2.5, 3.0, 0.5]
    weights = PromiseWeights(w_zeta=1.0, w_lm=0.5, w_gm=0.5, k_local=2)
    view, rm = scalar_setup(base_scores)
    before = promise_vector(view, weights, rm).values[2]
    bumped = list(base_scores)
    bumped[2] += 0.8
    view2, rm2 = scalar_setup(bumped)
    after = promise_vector(view2, weights, rm2).values[2]
    assert after >= before - 1e-12


def test_promise_values_bounded(rng):
    weights = PromiseWeights(w_zeta=1.0, w_lm=0.5, w_gm=0.5, k_local=3)
    for _ in range(20):
        view, rm = scalar_setup(list(rng.uniform(-3, 3, size=10)))
        pv = promise_vector(view, weights, rm)
        assert np.all(pv.values >= 0)
        assert np.all(pv.values <= weights.w_zeta + weights.w_lm + weights.w_gm + 1e-12)


def test_promise_weights_validation():
    with pytest.raises(ValueError):
        PromiseWeights(w_zeta=0, w_lm=0, w_gm=0)
    with pytest.raises(ValueError):
        PromiseWeights(w_zeta=-1)
