"""Test the resilience metric, the worst-case bound and the region predicates"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from fractions import Fraction

import numpy as np
import pytest

from app.core.attacks import overlap_attack, shift_beyond_attack
from app.core.data import GaussianSpec, generate_gaussians
from app.core.errors import InvalidBudgetError, TrainerInfeasibleError
from app.core.resilience import (
    Algorithm, ClassCounts, empirical_resilience, empirical_resilience_sup, in_resilient_region,
    perfectly_attackable_region, region_grid, resilience_bound,
)
from app.core.types import AttackBudget, Dataset


def attackable(algorithm, counts, a_pos, a_neg):
    return perfectly_attackable_region(algorithm, counts, AttackBudget(a_pos, a_neg)).perfectly_attackable


def test_bound_spot_values():
    assert resilience_bound(ClassCounts(50, 50), AttackBudget(10, 10)) == Fraction(3, 5)
    assert resilience_bound(ClassCounts(75, 25), AttackBudget(10, 5)) == Fraction(17, 25)
    assert resilience_bound(ClassCounts(37, 49), AttackBudget(16, 21)) == Fraction(34, 37)


@pytest.mark.parametrize("n_pos, n_neg", [(1, 1), (5, 24), (37, 49), (100, 3)])
def test_bound_is_zero_without_budget(n_pos, n_neg):
    assert resilience_bound(ClassCounts(n_pos, n_neg), AttackBudget(0, 0)) == 0


def test_bound_is_one_outside_resilient_region():
    assert resilience_bound(ClassCounts(50, 50), AttackBudget(25, 0)) == 1
    assert resilience_bound(ClassCounts(49, 50), AttackBudget(0, 25)) == 1
    assert not in_resilient_region(ClassCounts(50, 50), AttackBudget(25, 0))


def test_bound_rejects_budget_outside_class_sizes():
    with pytest.raises(InvalidBudgetError):
        resilience_bound(ClassCounts(10, 10), AttackBudget(11, 0))


def test_bound_is_monotone_and_at_most_one():
    counts = ClassCounts(20, 30)
    for a_pos in range(21):
        for a_neg in range(31):
            value = resilience_bound(counts, AttackBudget(a_pos, a_neg))
            assert 0 <= value <= 1
            if a_pos < 20:
                assert resilience_bound(counts, AttackBudget(a_pos + 1, a_neg)) >= value
            if a_neg < 30:
                assert resilience_bound(counts, AttackBudget(a_pos, a_neg + 1)) >= value


def test_region_nesting_exhaustive():
    counts = ClassCounts(75, 25)
    for a_pos in range(76):
        for a_neg in range(26):
            convex = attackable(Algorithm.CONVEX, counts, a_pos, a_neg)
            zero_one = attackable(Algorithm.ZERO_ONE, counts, a_pos, a_neg)
            majority = attackable(Algorithm.MAJORITY_ZERO_ONE, counts, a_pos, a_neg)
            assert convex >= zero_one >= majority
            assert majority == (2 * a_pos >= 75 or 2 * a_neg >= 25)
            assert majority == attackable(Algorithm.ANY_LINEAR, counts, a_pos, a_neg)


def test_region_nesting_random_counts():
    rng = np.random.default_rng(6)
    for _ in range(50):
        counts = ClassCounts(int(rng.integers(1, 41)), int(rng.integers(1, 41)))
        for a_pos in range(counts.n_pos + 1):
            for a_neg in range(counts.n_neg + 1):
                assert (attackable(Algorithm.CONVEX, counts, a_pos, a_neg)
                        >= attackable(Algorithm.ZERO_ONE, counts, a_pos, a_neg)
                        >= attackable(Algorithm.MAJORITY_ZERO_ONE, counts, a_pos, a_neg))


def test_region_boundaries():
    counts = ClassCounts(50, 25)
    assert attackable(Algorithm.MAJORITY_ZERO_ONE, counts, 25, 0)
    assert not attackable(Algorithm.MAJORITY_ZERO_ONE, counts, 24, 12)
    assert attackable(Algorithm.MAJORITY_ZERO_ONE, counts, 0, 13)
    for algorithm in (Algorithm.ZERO_ONE, Algorithm.MAJORITY_ZERO_ONE):
        assert not attackable(algorithm, counts, 0, 0)
    assert attackable(Algorithm.CONVEX, counts, 1, 0)
    # zero-one region edge at (75, 25): alpha+ + alpha- reaching the smaller class
    counts = ClassCounts(75, 25)
    assert attackable(Algorithm.ZERO_ONE, counts, 20, 5)
    assert not attackable(Algorithm.ZERO_ONE, counts, 19, 5)


def test_region_grid_matches_pointwise_predicate():
    counts = ClassCounts(75, 25)
    cells = region_grid(Algorithm.ZERO_ONE, counts, 11)
    assert len(cells) == 121
    for cell in cells:
        assert cell.verdict == perfectly_attackable_region(
            Algorithm.ZERO_ONE, counts, AttackBudget(cell.alpha_pos, cell.alpha_neg))
    corner = [c for c in cells if c.alpha_pos_normalized == 1.0 and c.alpha_neg_normalized == 1.0][0]
    assert (corner.alpha_pos, corner.alpha_neg) == (75, 25)
    assert not cells[0].verdict.perfectly_attackable


def test_empirical_resilience_without_attack(separable_2d):
    for trainer in ("hinge", "zero_one", "majority"):
        assert empirical_resilience(trainer, separable_2d, separable_2d) == 0.0


def test_empirical_resilience_raises_when_majority_infeasible():
    data = Dataset.from_classes([[0.0], [0.0]], [[0.0], [0.0]])
    with pytest.raises(TrainerInfeasibleError):
        empirical_resilience("majority", data, data)


def test_overlap_separates_zero_one_from_majority(overlap_pair):
    clean, tampered = overlap_pair
    budget = AttackBudget(0, 6)
    bound = resilience_bound(ClassCounts.of(clean), budget)
    assert bound == Fraction(6, 7)
    assert empirical_resilience("zero_one", clean, tampered) == 1.0
    majority = empirical_resilience("majority", clean, tampered)
    assert majority == pytest.approx(1 / 3)
    assert majority <= bound


def test_sup_takes_the_worst_trial(overlap_pair):
    clean, tampered = overlap_pair
    value = empirical_resilience_sup("zero_one", [(clean, clean), (clean, tampered)])
    assert value == 1.0


def test_shift_attack_stays_within_bound():
    budgets = [0, 1, 2]
    worst = {alpha: 0.0 for alpha in budgets}
    for dataset in range(3):
        clean = generate_gaussians(GaussianSpec([-5.0], [5.0], 6, 6, seed=40 + dataset))
        for trial in range(2):
            for alpha in budgets:
                tampered = shift_beyond_attack(clean, AttackBudget(alpha, alpha), seed=trial).tampered
                worst[alpha] = max(worst[alpha], empirical_resilience("majority", clean, tampered))
    for alpha in budgets:
        assert worst[alpha] <= float(resilience_bound(ClassCounts(6, 6), AttackBudget(alpha, alpha))) + 1e-9


@pytest.mark.slow
def test_desk_scale_overlap_signature():
    positives = [float(v) for v in range(5)]
    negatives = [float(v) for v in range(10, 34)]
    clean = Dataset.from_classes(positives, negatives)
    budget = AttackBudget(0, 10)
    result = overlap_attack(clean, budget, "zero_one", max_iters=5, seed=2)
    assert result.achieved_v == 1.0
    majority = empirical_resilience("majority", clean, result.tampered)
    assert majority <= 0.4 + 1e-12
    assert majority <= float(resilience_bound(ClassCounts(5, 24), budget))
