"""Test attack validation and the attack generators"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from app.core.attacks import is_valid_bfa, overlap_attack, point_attack, shift_beyond_attack
from app.core.errors import DegenerateMeansError, DimensionMismatchError, InvalidBudgetError
from app.core.types import NEGATIVE, POSITIVE, AttackBudget, Dataset


@pytest.fixture
def gaussian_pair():
    rng = np.random.default_rng(8)
    return Dataset.from_classes(rng.normal(-2.0, 1.0, size=(6, 2)), rng.normal(2.0, 1.0, size=(9, 2)))


def test_identity_is_valid_with_zero_budget(separable_2d):
    assert is_valid_bfa(separable_2d, separable_2d, AttackBudget(0, 0))


def test_validity_counts_replaced_vectors(separable_2d):
    tampered = separable_2d.replace_features([0], np.array([[7.0, 7.0]]))
    assert not is_valid_bfa(separable_2d, tampered, AttackBudget(0, 0))
    assert not is_valid_bfa(separable_2d, tampered, AttackBudget(0, 1))
    assert is_valid_bfa(separable_2d, tampered, AttackBudget(1, 0))


def test_validity_ignores_order_within_class(separable_2d):
    order = np.array([4, 3, 2, 1, 0, 9, 8, 7, 6, 5])
    assert is_valid_bfa(separable_2d, separable_2d.subset(order), AttackBudget(0, 0))


def test_validity_rejects_size_mismatch(separable_2d):
    with pytest.raises(DimensionMismatchError):
        is_valid_bfa(separable_2d, separable_2d.subset(range(9)), AttackBudget(1, 1))


def test_point_attack_moves_one_vector_along_mean_axis(gaussian_pair):
    result = point_attack(gaussian_pair, sigma=100.0, target_class=POSITIVE, seed=4)
    assert len(result.replaced_pos) == 1 and result.replaced_neg == ()
    assert is_valid_bfa(gaussian_pair, result.tampered, AttackBudget(1, 0))
    mean_pos = gaussian_pair.class_mean(POSITIVE)
    mean_neg = gaussian_pair.class_mean(NEGATIVE)
    moved = result.tampered.X[result.replaced_pos[0]]
    assert np.allclose(moved, mean_pos + 100.0 * (mean_neg - mean_pos))


def test_point_attack_on_negative_class(gaussian_pair):
    result = point_attack(gaussian_pair, sigma=10.0, target_class=NEGATIVE, seed=4)
    assert result.budget_used.as_tuple() == (0, 1)
    assert gaussian_pair.y[result.replaced_neg[0]] == NEGATIVE


def test_point_attack_rejects_coincident_means():
    data = Dataset.from_classes([[0.0], [2.0]], [[1.0], [1.0]])
    with pytest.raises(DegenerateMeansError):
        point_attack(data)


def test_point_attack_is_seeded(gaussian_pair):
    first = point_attack(gaussian_pair, seed=12)
    second = point_attack(gaussian_pair, seed=12)
    assert first.replaced_pos == second.replaced_pos
    assert np.array_equal(first.tampered.X, second.tampered.X)


def test_overlap_attack_copies_opposite_class_vectors(overlap_pair):
    clean, _ = overlap_pair
    result = overlap_attack(clean, AttackBudget(0, 6), "zero_one", max_iters=5, seed=1)
    assert is_valid_bfa(clean, result.tampered, AttackBudget(0, 6))
    assert len(result.replaced_neg) == 6
    copies = result.tampered.X[list(result.replaced_neg), 0]
    # six copies spread over three positives, each used twice
    assert sorted(copies.tolist()) == [0.0, 0.0, 1.0, 1.0, 2.0, 2.0]
    assert result.achieved_v == 1.0
    assert result.rounds == 1


def test_overlap_attack_cycles_when_budget_exceeds_pool():
    data = Dataset.from_classes([[0.0], [1.0]], [[5.0], [6.0], [7.0], [8.0], [9.0], [10.0]])
    result = overlap_attack(data, AttackBudget(0, 5), "hinge", max_iters=2, seed=3)
    copies = result.tampered.X[list(result.replaced_neg), 0].tolist()
    assert sorted(set(copies)) == [0.0, 1.0]
    assert sorted(copies.count(v) for v in (0.0, 1.0)) == [2, 3]


def test_first_overlap_round_stacks_surplus_on_axis_ends():
    data = Dataset.from_classes([[0.0], [1.0], [2.0], [3.0]], [[float(v)] for v in range(10, 22)])
    result = overlap_attack(data, AttackBudget(0, 6), "zero_one", max_iters=1, seed=3)
    copies = result.tampered.X[list(result.replaced_neg), 0]
    # each positive once, the surplus on the far and near ends
    assert sorted(copies.tolist()) == [0.0, 0.0, 1.0, 2.0, 3.0, 3.0]
    assert result.achieved_v == 1.0


def test_overlap_attack_copies_victims_when_class_is_exhausted():
    data = Dataset.from_classes([[0.0], [1.0], [2.0]], [[5.0], [6.0], [7.0]])
    budget = AttackBudget(1, 3)
    result = overlap_attack(data, budget, "hinge", max_iters=2, seed=0)
    assert is_valid_bfa(data, result.tampered, budget)
    assert len(result.replaced_pos) == 1 and len(result.replaced_neg) == 3
    assert result.tampered.X[result.replaced_pos[0], 0] in (5.0, 6.0, 7.0)
    kept = {0.0, 1.0, 2.0} - {data.X[result.replaced_pos[0], 0]}
    assert set(result.tampered.X[list(result.replaced_neg), 0].tolist()) == kept


def test_overlap_attack_without_budget_returns_clean(separable_2d):
    result = overlap_attack(separable_2d, AttackBudget(0, 0), "hinge")
    assert result.tampered is separable_2d
    assert result.achieved_v == 0.0


def test_overlap_attack_rejects_budget_beyond_class(separable_2d):
    with pytest.raises(InvalidBudgetError):
        overlap_attack(separable_2d, AttackBudget(6, 0), "hinge")


def test_shift_beyond_places_positives_past_negatives(gaussian_pair):
    result = shift_beyond_attack(gaussian_pair, AttackBudget(3, 3), seed=5)
    assert is_valid_bfa(gaussian_pair, result.tampered, AttackBudget(3, 0))
    mean_pos = gaussian_pair.class_mean(POSITIVE)
    axis = gaussian_pair.class_mean(NEGATIVE) - mean_pos
    unit = axis / np.linalg.norm(axis)
    extreme = ((gaussian_pair.X[gaussian_pair.y == NEGATIVE] - mean_pos) @ unit).max()
    moved = (result.tampered.X[list(result.replaced_pos)] - mean_pos) @ unit
    assert np.all(moved > extreme)


def test_shift_beyond_budgets_are_nested(gaussian_pair):
    small = shift_beyond_attack(gaussian_pair, AttackBudget(2, 2), seed=9)
    large = shift_beyond_attack(gaussian_pair, AttackBudget(4, 4), seed=9)
    assert set(small.replaced_pos) <= set(large.replaced_pos)
    for index in small.replaced_pos:
        assert np.array_equal(small.tampered.X[index], large.tampered.X[index])
