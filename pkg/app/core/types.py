"""Domain types: datasets, linear classifiers, attack budgets and empirical risks"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Union
import logging

import numpy as np

from app.core.errors import DimensionMismatchError, EmptyClassError, InvalidBudgetError

logger = logging.getLogger(__name__)

POSITIVE = 1
NEGATIVE = -1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class LabeledPoint:
    """A feature vector with a +1/-1 label"""
    features: np.ndarray
    label: int

    def __post_init__(self):
        features = _frozen(np.array(self.features, dtype=float).reshape(-1))
        if not np.all(np.isfinite(features)):
            raise ValueError("Feature components must be finite")
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"Label must be +1 or -1, got {self.label}")
        object.__setattr__(self, "features", features)


@dataclass(frozen=True)
class Dataset:
    """Ordered multiset of labeled points stored as a feature matrix and a label vector"""
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.array(self.y, dtype=int).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"Feature matrix {X.shape} does not match {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("Feature components must be finite")
        if not np.all(np.isin(y, (POSITIVE, NEGATIVE))):
            raise ValueError("Labels must be +1 or -1")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def from_points(cls, points: Sequence[LabeledPoint]) -> "Dataset":
        if not points:
            raise EmptyClassError("Cannot build a dataset from no points")
        dims = {len(point.features) for point in points}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Points have mixed dimensions {sorted(dims)}")
        X = np.vstack([point.features for point in points])
        y = np.array([point.label for point in points])
        return cls(X, y)

    @classmethod
    def from_classes(cls, positives: Union[np.ndarray, Sequence], negatives: Union[np.ndarray, Sequence]) -> "Dataset":
        """Build a dataset with all positives first, then all negatives"""
        pos = np.array(positives, dtype=float)
        neg = np.array(negatives, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if neg.ndim == 1:
            neg = neg.reshape(-1, 1)
        return cls(np.vstack([pos, neg]),
                   np.concatenate([np.full(len(pos), POSITIVE), np.full(len(neg), NEGATIVE)]))

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.y == POSITIVE))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.y == NEGATIVE))

    @property
    def points(self) -> List[LabeledPoint]:
        return [LabeledPoint(x, int(label)) for x, label in zip(self.X, self.y)]

    def indices_of(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.y == label)

    def class_mean(self, label: int) -> np.ndarray:
        idx = self.indices_of(label)
        if idx.size == 0:
            raise EmptyClassError(f"No points with label {label:+d}")
        return self.X[idx].mean(axis=0)

    def require_both_classes(self) -> None:
        if self.n_pos < 1 or self.n_neg < 1:
            raise EmptyClassError(
                f"Both classes must be non-empty (nPos={self.n_pos}, nNeg={self.n_neg})")

    def replace_features(self, indices: Sequence[int], rows: np.ndarray) -> "Dataset":
        """Return a copy with the feature vectors at ``indices`` replaced; labels are kept"""
        X = self.X.copy()
        X[np.asarray(indices, dtype=int)] = np.asarray(rows, dtype=float).reshape(len(indices), self.p)
        return Dataset(X, self.y.copy())

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[idx].copy(), self.y[idx].copy())


@dataclass(frozen=True)
class LinearClassifier:
    """Affine separator in homogeneous coordinates; the last weight is the bias"""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.size < 1 or not np.all(np.isfinite(weights)):
            raise ValueError("Classifier weights must be a non-empty finite vector")
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def p(self) -> int:
        return self.weights.size - 1

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.p:
            raise DimensionMismatchError(
                f"Classifier expects {self.p} features, got {X.shape[1]}")
        return X @ self.weights[:-1] + self.weights[-1]

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        # sign(0) resolves to the negative label
        return np.where(self.decision_values(X) > 0, POSITIVE, NEGATIVE)

    def to_dict(self) -> dict:
        return {"weights": [float(w) for w in self.weights]}


@dataclass(frozen=True)
class AttackBudget:
    """Per-class tamper limits (alpha+, alpha-)"""
    alpha_pos: int = 0
    alpha_neg: int = 0

    def __post_init__(self):
        if int(self.alpha_pos) != self.alpha_pos or int(self.alpha_neg) != self.alpha_neg:
            raise InvalidBudgetError("Budgets must be integers")
        if self.alpha_pos < 0 or self.alpha_neg < 0:
            raise InvalidBudgetError(f"Budgets must be non-negative, got {self}")

    def validate_for(self, n_pos: int, n_neg: int) -> None:
        if self.alpha_pos > n_pos or self.alpha_neg > n_neg:
            raise InvalidBudgetError(
                f"Budget ({self.alpha_pos}, {self.alpha_neg}) exceeds class sizes ({n_pos}, {n_neg})")

    def as_tuple(self):
        return (self.alpha_pos, self.alpha_neg)


@dataclass(frozen=True)
class RiskVector:
    """Per-class 0-1 empirical risks kept as exact counts"""
    errors_pos: int
    n_pos: int
    errors_neg: int
    n_neg: int

    @property
    def risk_pos(self) -> float:
        return self.errors_pos / self.n_pos

    @property
    def risk_neg(self) -> float:
        return self.errors_neg / self.n_neg

    @property
    def exact(self):
        return Fraction(self.errors_pos, self.n_pos), Fraction(self.errors_neg, self.n_neg)

    @property
    def total_errors(self) -> int:
        return self.errors_pos + self.errors_neg

    def to_dict(self) -> dict:
        return {
            "risk_pos": self.risk_pos,
            "risk_neg": self.risk_neg,
            "errors_pos": self.errors_pos,
            "errors_neg": self.errors_neg,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }


def predict(classifier: LinearClassifier, x: np.ndarray) -> int:
    """Label of a single feature vector, sign(w.[x;1]) with sign(0) = -1"""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != classifier.p:
        raise DimensionMismatchError(f"Classifier expects {classifier.p} features, got {x.size}")
    return int(classifier.predict_many(x.reshape(1, -1))[0])


def risk_vector_01(classifier: LinearClassifier, data: Dataset) -> RiskVector:
    data.require_both_classes()
    predictions = classifier.predict_many(data.X)
    wrong = predictions != data.y
    return RiskVector(
        errors_pos=int(np.count_nonzero(wrong & (data.y == POSITIVE))),
        n_pos=data.n_pos,
        errors_neg=int(np.count_nonzero(wrong & (data.y == NEGATIVE))),
        n_neg=data.n_neg,
    )


def max_risk(rv: RiskVector) -> float:
    """Infinity norm of the risk vector with unit class weights"""
    return max(rv.risk_pos, rv.risk_neg)
