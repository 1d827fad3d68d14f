"""Bounded feature attacks: validation and the point, overlap and shift-beyond generators"""

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np

from app.core.config import TrainConfig
from app.core.errors import DegenerateMeansError, DimensionMismatchError, SolverError, TrainerInfeasibleError
from app.core.resilience import empirical_resilience
from app.core.types import NEGATIVE, POSITIVE, AttackBudget, Dataset

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 100.0
DEFAULT_MAX_ITERS = 200


@dataclass(frozen=True)
class AttackResult:
    """Tampered copy of a dataset and the indices whose feature vectors were replaced"""
    tampered: Dataset
    replaced_pos: Tuple[int, ...]
    replaced_neg: Tuple[int, ...]
    seed: int
    achieved_v: Optional[float] = None
    rounds: int = 0

    @property
    def budget_used(self) -> AttackBudget:
        return AttackBudget(len(self.replaced_pos), len(self.replaced_neg))


def _class_difference(original: np.ndarray, tampered: np.ndarray) -> int:
    before = Counter(map(tuple, original))
    after = Counter(map(tuple, tampered))
    return sum((after - before).values())


def is_valid_bfa(original: Dataset, tampered: Dataset, budget: AttackBudget) -> bool:
    """True when tampered differs from original by at most the budgeted feature vectors per class"""
    if original.size != tampered.size or original.p != tampered.p:
        raise DimensionMismatchError(
            f"Datasets differ in shape: {original.X.shape} vs {tampered.X.shape}")
    if original.n_pos != tampered.n_pos or original.n_neg != tampered.n_neg:
        raise DimensionMismatchError("Datasets differ in per-class counts")
    changed_pos = _class_difference(original.X[original.y == POSITIVE], tampered.X[tampered.y == POSITIVE])
    changed_neg = _class_difference(original.X[original.y == NEGATIVE], tampered.X[tampered.y == NEGATIVE])
    return changed_pos <= budget.alpha_pos and changed_neg <= budget.alpha_neg


def _mean_axis(data: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    mean_pos = data.class_mean(POSITIVE)
    mean_neg = data.class_mean(NEGATIVE)
    if np.linalg.norm(mean_neg - mean_pos) <= 1e-12 * (1 + np.linalg.norm(mean_pos)):
        raise DegenerateMeansError("Class means coincide; the attack direction is undefined")
    return mean_pos, mean_neg


def point_attack(data: Dataset, sigma: float = DEFAULT_SIGMA, target_class: int = POSITIVE,
                 seed: int = 0) -> AttackResult:
    """Move one feature vector of ``target_class`` far along the axis towards the other class mean"""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if target_class not in (POSITIVE, NEGATIVE):
        raise ValueError(f"Unknown target class {target_class}")
    targets = data.indices_of(target_class)
    if targets.size == 0:
        raise ValueError(f"Target class {target_class:+d} is empty")
    mean_pos, mean_neg = _mean_axis(data)
    own, other = (mean_pos, mean_neg) if target_class == POSITIVE else (mean_neg, mean_pos)

    rng = np.random.default_rng(seed)
    victim = int(rng.choice(targets))
    moved = own + sigma * (other - own)
    tampered = data.replace_features([victim], moved.reshape(1, -1))
    logger.info(f"Point attack moved index {victim} (label {target_class:+d}) with sigma={sigma:g}")
    replaced = (victim,)
    if target_class == POSITIVE:
        return AttackResult(tampered, replaced, (), seed)
    return AttackResult(tampered, (), replaced, seed)


def _cycled_choice(rng: np.random.Generator, pool: np.ndarray, count: int) -> np.ndarray:
    """Draw ``count`` entries without replacement, restarting a fresh permutation when the pool runs out"""
    picks = []
    while len(picks) < count:
        picks.extend(rng.permutation(pool)[:count - len(picks)].tolist())
    return np.array(picks, dtype=int)


def _extremes_first(data: Dataset, pool: np.ndarray, count: int) -> np.ndarray:
    """Every pool vector once, then extra copies alternating between the pool's far and near ends on the mean axis"""
    axis = data.class_mean(NEGATIVE) - data.class_mean(POSITIVE)
    outward = data.X[pool] @ axis
    if data.y[pool[0]] == POSITIVE:
        outward = -outward
    ranked = pool[np.argsort(-outward, kind="stable")]
    ends = [ranked[k // 2] if k % 2 == 0 else ranked[-1 - k // 2] for k in range(ranked.size)]
    if count <= pool.size:
        return np.array(ends[:count], dtype=int)
    picks = pool.tolist()
    while len(picks) < count:
        picks.extend(ends[:count - len(picks)])
    return np.array(picks, dtype=int)


def _copy_pool(data: Dataset, label: int, victims: np.ndarray) -> np.ndarray:
    members = data.indices_of(label)
    untouched = np.setdiff1d(members, victims)
    if untouched.size:
        return untouched
    logger.debug(f"Overlap attack: every {label:+d} vector is a victim; copying from the original class")
    return members


def _overlap_round(data: Dataset, budget: AttackBudget, rng: np.random.Generator,
                   concentrated: bool = False) -> Tuple[Dataset, np.ndarray, np.ndarray]:
    positives, negatives = data.indices_of(POSITIVE), data.indices_of(NEGATIVE)
    pos_victims = np.sort(rng.choice(positives, budget.alpha_pos, replace=False))
    neg_victims = np.sort(rng.choice(negatives, budget.alpha_neg, replace=False))

    def pick(pool: np.ndarray, count: int) -> np.ndarray:
        if concentrated:
            return _extremes_first(data, pool, count)
        return _cycled_choice(rng, pool, count)

    X = data.X.copy()
    if budget.alpha_pos:
        X[pos_victims] = data.X[pick(_copy_pool(data, NEGATIVE, neg_victims), budget.alpha_pos)]
    if budget.alpha_neg:
        X[neg_victims] = data.X[pick(_copy_pool(data, POSITIVE, pos_victims), budget.alpha_neg)]
    return Dataset(X, data.y.copy()), pos_victims, neg_victims


def overlap_attack(data: Dataset, budget: AttackBudget, trainer: str, target_v: float = 1.0,
                   max_iters: int = DEFAULT_MAX_ITERS, seed: int = 0,
                   cfg: Optional[TrainConfig] = None) -> AttackResult:
    """Best of ``max_iters`` rounds copying budgeted vectors onto opposite-class vectors

    The first round covers every untouched opposite-class vector and stacks the surplus on the ends of
    the mean axis; later rounds draw their targets at random.
    """
    budget.validate_for(data.n_pos, data.n_neg)
    if not 0 < target_v <= 1:
        raise ValueError("target_v must lie in (0, 1]")
    if budget.alpha_pos == 0 and budget.alpha_neg == 0:
        value = empirical_resilience(trainer, data, data, cfg)
        return AttackResult(data, (), (), seed, value, 1)

    rng = np.random.default_rng(seed)
    best: Optional[AttackResult] = None
    rounds = 0
    for rounds in range(1, max_iters + 1):
        tampered, pos_victims, neg_victims = _overlap_round(data, budget, rng, concentrated=rounds == 1)
        try:
            value = empirical_resilience(trainer, data, tampered, cfg)
        except TrainerInfeasibleError:
            logger.debug(f"Overlap round {rounds}: {trainer} infeasible on the tampered data")
            continue
        except SolverError as e:
            logger.warning(f"Overlap round {rounds}: solver failure ({e}); round skipped")
            continue
        if best is None or value > best.achieved_v:
            best = AttackResult(tampered, tuple(pos_victims.tolist()), tuple(neg_victims.tolist()),
                                seed, value, rounds)
        if value >= target_v:
            break

    if best is None:
        logger.warning(f"Overlap attack: no round produced a trainable dataset for {trainer}")
        tampered, pos_victims, neg_victims = _overlap_round(data, budget, np.random.default_rng(seed), concentrated=True)
        return AttackResult(tampered, tuple(pos_victims.tolist()), tuple(neg_victims.tolist()), seed, None, rounds)
    logger.info(f"Overlap attack against {trainer}: achieved V={best.achieved_v:.4f} "
                f"(round {best.rounds} of {rounds})")
    return AttackResult(best.tampered, best.replaced_pos, best.replaced_neg, seed, best.achieved_v, rounds)


def shift_beyond_attack(data: Dataset, budget: AttackBudget, seed: int = 0) -> AttackResult:
    """Move alpha+ random positives past the far extreme of the negative class along the mean axis"""
    budget.validate_for(data.n_pos, data.n_neg)
    if budget.alpha_pos == 0:
        return AttackResult(data, (), (), seed)
    mean_pos, mean_neg = _mean_axis(data)
    axis = mean_neg - mean_pos
    distance = np.linalg.norm(axis)
    unit = axis / distance

    positions = (data.X - mean_pos) @ unit
    extreme = positions[data.y == NEGATIVE].max()
    rng = np.random.default_rng(seed)
    # full permutation and offsets so a larger budget extends a smaller one under the same seed
    order = rng.permutation(data.indices_of(POSITIVE))
    offsets = rng.uniform(0.1, 1.0, size=order.size) * distance
    chosen = order[:budget.alpha_pos]
    shift = (extreme - positions[chosen] + offsets[:budget.alpha_pos])[:, None] * unit
    tampered = data.replace_features(chosen, data.X[chosen] + shift)
    return AttackResult(tampered, tuple(sorted(chosen.tolist())), (), seed)
