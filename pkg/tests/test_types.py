"""Test datasets, classifiers, budgets and risk vectors"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import DimensionMismatchError, EmptyClassError, InvalidBudgetError
from app.core.types import (
    NEGATIVE, POSITIVE, AttackBudget, Dataset, LabeledPoint, LinearClassifier, RiskVector,
    max_risk, predict, risk_vector_01,
)


def test_predict_resolves_zero_to_negative():
    classifier = LinearClassifier([1.0, -1.0, 0.0])
    assert predict(classifier, [2.0, 2.0]) == NEGATIVE
    assert predict(classifier, [3.0, 2.0]) == POSITIVE
    assert predict(classifier, [1.0, 2.0]) == NEGATIVE


def test_predict_rejects_wrong_dimension():
    classifier = LinearClassifier([1.0, 0.0, 0.5])
    with pytest.raises(DimensionMismatchError):
        predict(classifier, [1.0, 2.0, 3.0])


def test_risk_vector_counts_errors_per_class(separable_2d):
    # everything predicted negative
    classifier = LinearClassifier([0.0, 0.0, -1.0])
    rv = risk_vector_01(classifier, separable_2d)
    assert (rv.errors_pos, rv.errors_neg) == (5, 0)
    assert rv.risk_pos == 1.0 and rv.risk_neg == 0.0
    assert rv.exact == (Fraction(1), Fraction(0))
    assert max_risk(rv) == 1.0


def test_separating_classifier_has_zero_risk(separable_2d):
    classifier = LinearClassifier([-1.0, -1.0, 4.0])
    assert max_risk(risk_vector_01(classifier, separable_2d)) == 0.0


def test_risk_vector_requires_both_classes():
    data = Dataset.from_classes([[0.0], [1.0]], np.empty((0, 1)))
    with pytest.raises(EmptyClassError):
        risk_vector_01(LinearClassifier([1.0, 0.0]), data)


def test_dataset_validation():
    with pytest.raises(DimensionMismatchError):
        Dataset(np.zeros((3, 2)), [1, -1])
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), [1, 0])
    with pytest.raises(ValueError):
        Dataset([[np.nan, 0.0], [1.0, 1.0]], [1, -1])


def test_dataset_from_points_and_counts():
    points = [LabeledPoint([0.0, 1.0], POSITIVE), LabeledPoint([2.0, 1.0], NEGATIVE),
              LabeledPoint([3.0, 1.0], NEGATIVE)]
    data = Dataset.from_points(points)
    assert (data.n_pos, data.n_neg, data.p, data.size) == (1, 2, 2, 3)
    assert np.allclose(data.class_mean(NEGATIVE), [2.5, 1.0])
    with pytest.raises(DimensionMismatchError):
        Dataset.from_points([LabeledPoint([0.0], POSITIVE), LabeledPoint([0.0, 1.0], NEGATIVE)])


def test_dataset_is_immutable(separable_2d):
    with pytest.raises(ValueError):
        separable_2d.X[0, 0] = 9.0
    replaced = separable_2d.replace_features([0], np.array([[9.0, 9.0]]))
    assert replaced.X[0, 0] == 9.0
    assert separable_2d.X[0, 0] == 0.0


@pytest.mark.parametrize("alpha_pos, alpha_neg", [(-1, 0), (0, -2), (1.5, 0)])
def test_budget_rejects_invalid_values(alpha_pos, alpha_neg):
    with pytest.raises(InvalidBudgetError):
        AttackBudget(alpha_pos, alpha_neg)


def test_budget_against_class_sizes():
    AttackBudget(2, 3).validate_for(2, 3)
    with pytest.raises(InvalidBudgetError):
        AttackBudget(3, 0).validate_for(2, 3)


def test_risk_shift_bounded_by_budget_fraction():
    """Replacing alpha vectors of a class moves its risk by at most alpha / class size"""
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n_pos, n_neg, p = rng.integers(2, 12), rng.integers(2, 12), rng.integers(1, 4)
        data = Dataset.from_classes(rng.normal(size=(n_pos, p)), rng.normal(1.0, size=(n_neg, p)))
        classifier = LinearClassifier(rng.normal(size=p + 1))
        alpha_pos, alpha_neg = rng.integers(0, n_pos + 1), rng.integers(0, n_neg + 1)
        victims = np.concatenate([
            rng.choice(data.indices_of(POSITIVE), alpha_pos, replace=False),
            rng.choice(data.indices_of(NEGATIVE), alpha_neg, replace=False),
        ]).astype(int)
        tampered = data.replace_features(victims, rng.normal(scale=5.0, size=(victims.size, p)))

        before, after = risk_vector_01(classifier, data), risk_vector_01(classifier, tampered)
        (pos0, neg0), (pos1, neg1) = before.exact, after.exact
        assert abs(pos1 - pos0) <= Fraction(int(alpha_pos), int(n_pos))
        assert abs(neg1 - neg0) <= Fraction(int(alpha_neg), int(n_neg))


def test_risk_vector_to_dict():
    rv = RiskVector(1, 4, 0, 5)
    assert rv.to_dict()["risk_pos"] == 0.25
    assert rv.total_errors == 1
