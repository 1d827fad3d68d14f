"""Resilience metric, worst-case bound of the majority 0-1 trainer, and attack-region predicates"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple
import logging

from app.core.classifiers import TrainReport, train
from app.core.config import TrainConfig
from app.core.errors import InvalidBudgetError, TrainerInfeasibleError
from app.core.types import AttackBudget, Dataset, RiskVector, max_risk, risk_vector_01

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    CONVEX = "convex"
    ZERO_ONE = "zero_one"
    MAJORITY_ZERO_ONE = "majority_zero_one"
    ANY_LINEAR = "any_linear"


@dataclass(frozen=True)
class ClassCounts:
    n_pos: int
    n_neg: int

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError(f"Class counts must be positive, got ({self.n_pos}, {self.n_neg})")

    @classmethod
    def of(cls, data: Dataset) -> "ClassCounts":
        return cls(data.n_pos, data.n_neg)


@dataclass(frozen=True)
class RegionVerdict:
    algorithm: Algorithm
    perfectly_attackable: bool


@dataclass(frozen=True)
class GridCell:
    alpha_pos_normalized: float
    alpha_neg_normalized: float
    alpha_pos: int
    alpha_neg: int
    verdict: RegionVerdict


@dataclass(frozen=True)
class ResilienceEvaluation:
    """One trained-on-tampered, evaluated-on-clean measurement"""
    value: float
    clean_risk: RiskVector
    report: TrainReport


def _check_theta(counts: ClassCounts, budget: AttackBudget) -> None:
    if budget.alpha_pos > counts.n_pos or budget.alpha_neg > counts.n_neg:
        raise InvalidBudgetError(
            f"Budget ({budget.alpha_pos}, {budget.alpha_neg}) lies outside "
            f"[0, {counts.n_pos}] x [0, {counts.n_neg}]")


def evaluate_resilience(trainer: str, clean: Dataset, tampered: Dataset,
                        cfg: Optional[TrainConfig] = None) -> ResilienceEvaluation:
    if clean.p != tampered.p:
        raise ValueError(f"Clean data has {clean.p} features but tampered data has {tampered.p}")
    report = train(trainer, tampered, cfg)
    if not report.feasible:
        raise TrainerInfeasibleError(f"Trainer {trainer} found no feasible classifier on the tampered data")
    risk = risk_vector_01(report.classifier, clean)
    return ResilienceEvaluation(max_risk(risk), risk, report)


def empirical_resilience(trainer: str, clean: Dataset, tampered: Dataset,
                         cfg: Optional[TrainConfig] = None) -> float:
    """Train on the tampered data and return the worst per-class 0-1 risk on the clean data"""
    return evaluate_resilience(trainer, clean, tampered, cfg).value


def empirical_resilience_sup(trainer: str, trials: Iterable[Tuple[Dataset, Dataset]],
                             cfg: Optional[TrainConfig] = None) -> float:
    """Maximum of the per-instance value over (clean, tampered) trials; a lower estimate of the supremum"""
    best = 0.0
    for clean, tampered in trials:
        best = max(best, empirical_resilience(trainer, clean, tampered, cfg))
    return best


def in_resilient_region(counts: ClassCounts, budget: AttackBudget) -> bool:
    return 2 * budget.alpha_pos < counts.n_pos and 2 * budget.alpha_neg < counts.n_neg


def resilience_bound(counts: ClassCounts, budget: AttackBudget) -> Fraction:
    """Worst-case resilience of the majority 0-1 trainer; 1 outside the resilient region"""
    _check_theta(counts, budget)
    if not in_resilient_region(counts, budget):
        return Fraction(1)
    a_pos, a_neg = budget.alpha_pos, budget.alpha_neg
    pos_term = min(Fraction(2 * a_pos + a_neg), a_pos + Fraction(counts.n_pos - 1, 2)) / counts.n_pos
    neg_term = min(Fraction(a_pos + 2 * a_neg), a_neg + Fraction(counts.n_neg - 1, 2)) / counts.n_neg
    return max(pos_term, neg_term)


def perfectly_attackable_region(algorithm: Algorithm, counts: ClassCounts,
                                budget: AttackBudget) -> RegionVerdict:
    _check_theta(counts, budget)
    algorithm = Algorithm(algorithm)
    a_pos, a_neg = budget.alpha_pos, budget.alpha_neg
    # integer cross-multiplication: alpha >= n/2  <=>  2 alpha >= n
    half_class = 2 * a_pos >= counts.n_pos or 2 * a_neg >= counts.n_neg
    if algorithm == Algorithm.CONVEX:
        attackable = a_pos > 0 or a_neg > 0
    elif algorithm == Algorithm.ZERO_ONE:
        attackable = half_class or a_pos + a_neg >= counts.n_neg or a_pos + a_neg >= counts.n_pos
    else:
        attackable = half_class
    return RegionVerdict(algorithm, attackable)


def _nearest_count(fraction: Fraction, size: int) -> int:
    # round half up on exact rationals
    return int((fraction * size + Fraction(1, 2)) // 1)


def region_grid(algorithm: Algorithm, counts: ClassCounts, resolution: int) -> List[GridCell]:
    """Evaluate the region predicate on a resolution x resolution grid of normalized budgets"""
    if resolution < 2:
        raise ValueError("Grid resolution must be at least 2")
    cells = []
    for i in range(resolution):
        u = Fraction(i, resolution - 1)
        a_pos = _nearest_count(u, counts.n_pos)
        for j in range(resolution):
            v = Fraction(j, resolution - 1)
            a_neg = _nearest_count(v, counts.n_neg)
            verdict = perfectly_attackable_region(algorithm, counts, AttackBudget(a_pos, a_neg))
            cells.append(GridCell(float(u), float(v), a_pos, a_neg, verdict))
    return cells
