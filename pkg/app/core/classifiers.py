"""Hinge, 0-1 and majority 0-1 linear trainers plus a brute-force 0-1 oracle"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Callable, Dict, List, Optional
import logging
import math

import numpy as np
from sklearn.preprocessing import MinMaxScaler, RobustScaler

from app.core.config import TrainConfig
from app.core.errors import ConfigError, GuardViolationError, SolverError
from app.core.lp_solver import LpProblem, LpStatus, solve_lp
from app.core.milp_solver import MilpProblem, solve_milp
from app.core.types import (
    NEGATIVE, POSITIVE, Dataset, LinearClassifier, RiskVector, max_risk, risk_vector_01,
)

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_P = 3
BRUTE_FORCE_MAX_N = 14
BIG_M_RTOL = 1e-9


class TrainerId(str, Enum):
    HINGE = "hinge"
    ZERO_ONE = "zero_one"
    MAJORITY = "majority"


@dataclass(frozen=True)
class TrainReport:
    """Outcome of one training run; ``classifier`` is None when infeasible"""
    trainer: str
    classifier: Optional[LinearClassifier]
    train_risk: Optional[RiskVector]
    solver_objective: Optional[float]
    feasible: bool = True
    nodes_explored: int = 0
    big_m_slack: Optional[float] = None
    big_m_valid: Optional[bool] = None
    extra: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "trainer": self.trainer,
            "feasible": self.feasible,
            "weights": None if self.classifier is None else self.classifier.to_dict()["weights"],
            "train_risk": None if self.train_risk is None else self.train_risk.to_dict(),
            "solver_objective": self.solver_objective,
            "nodes_explored": self.nodes_explored,
            "big_m_slack": self.big_m_slack,
            "big_m_valid": self.big_m_valid,
        }


def majority_limit(class_size: int) -> int:
    """Largest misclassification count that keeps the class risk strictly below one half"""
    return (class_size - 1) // 2


class FeatureScaler:
    """Per-column affine map x~ = a*x + d, with weights mapped back afterwards"""

    def __init__(self, mode: str = "robust"):
        self.mode = mode
        self.a: Optional[np.ndarray] = None
        self.d: Optional[np.ndarray] = None

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        if self.mode == "robust":
            scaler = RobustScaler().fit(X)
            self.a = 1.0 / scaler.scale_
            self.d = -scaler.center_ / scaler.scale_
        elif self.mode == "minmax":
            scaler = MinMaxScaler(feature_range=(-1, 1)).fit(X)
            self.a = scaler.scale_
            self.d = scaler.min_
        elif self.mode == "none":
            self.a = np.ones(X.shape[1])
            self.d = np.zeros(X.shape[1])
        else:
            raise ConfigError(f"Unknown scaling mode: {self.mode}")
        return X * self.a + self.d

    def unscale(self, scaled_weights: np.ndarray) -> np.ndarray:
        h, bias = scaled_weights[:-1], scaled_weights[-1]
        return np.append(h * self.a, bias + h @ self.d)


def _homogeneous(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _check_config(cfg: TrainConfig) -> None:
    if cfg.regularization != 0:
        raise ConfigError("Only regularization = 0 is supported")


def _margin_rows(Xh: np.ndarray, y: np.ndarray) -> np.ndarray:
    # rows of -y_i [x_i;1] for the weight block
    return -(y[:, None] * Xh)


def train_hinge(data: Dataset, cfg: Optional[TrainConfig] = None) -> TrainReport:
    """Minimize the summed hinge loss with an LP over boxed weights and slacks"""
    cfg = cfg or TrainConfig()
    _check_config(cfg)
    data.require_both_classes()
    scaler = FeatureScaler(cfg.scaling)
    Xh = _homogeneous(scaler.fit_transform(data.X))
    N, q = Xh.shape

    # variables: weights (q) then slacks xi (N); xi_i >= 1 - y_i h.x_i
    A = np.hstack([_margin_rows(Xh, data.y), -np.eye(N)])
    b = -np.ones(N)
    c = np.concatenate([np.zeros(q), np.ones(N)])
    lower = np.concatenate([np.full(q, -cfg.weight_bound), np.zeros(N)])
    upper = np.concatenate([np.full(q, cfg.weight_bound), np.full(N, np.inf)])
    solution = solve_lp(LpProblem(c, A, b, lower, upper))
    if solution.status != LpStatus.OPTIMAL:
        raise SolverError(f"Hinge LP ended with status {solution.status.value}")

    classifier = LinearClassifier(scaler.unscale(solution.values[:q]))
    risk = risk_vector_01(classifier, data)
    logger.info(f"Hinge trainer: loss {solution.objective_value:.6g}, "
                f"training risks ({risk.risk_pos:.4f}, {risk.risk_neg:.4f})")
    return TrainReport(TrainerId.HINGE.value, classifier, risk, float(solution.objective_value),
                       extra={"lp_iterations": solution.iterations})


def _big_m_column(Xh: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Per-point big-M: the configured delta, raised where the weight box allows a larger margin violation"""
    reachable = 1.0 + cfg.weight_bound * np.abs(Xh).sum(axis=1)
    return np.maximum(cfg.big_m, reachable)


def _zero_one_problem(Xh: np.ndarray, y: np.ndarray, big_m: np.ndarray, cfg: TrainConfig,
                      majority: bool) -> MilpProblem:
    N, q = Xh.shape
    # y_i h.x_i >= 1 - delta_i z_i
    A = np.hstack([_margin_rows(Xh, y), -np.diag(big_m)])
    b = -np.ones(N)
    if majority:
        pos_row = np.concatenate([np.zeros(q), (y == POSITIVE).astype(float)])
        neg_row = np.concatenate([np.zeros(q), (y == NEGATIVE).astype(float)])
        n_pos = int(np.count_nonzero(y == POSITIVE))
        n_neg = int(np.count_nonzero(y == NEGATIVE))
        A = np.vstack([A, pos_row, neg_row])
        b = np.concatenate([b, [majority_limit(n_pos), majority_limit(n_neg)]])
    c = np.concatenate([np.zeros(q), np.ones(N)])
    lower = np.concatenate([np.full(q, -cfg.weight_bound), np.zeros(N)])
    upper = np.concatenate([np.full(q, cfg.weight_bound), np.ones(N)])
    return MilpProblem(LpProblem(c, A, b, lower, upper), range(q, q + N))


def _train_milp(data: Dataset, cfg: Optional[TrainConfig], majority: bool) -> TrainReport:
    cfg = cfg or TrainConfig()
    _check_config(cfg)
    data.require_both_classes()
    name = TrainerId.MAJORITY.value if majority else TrainerId.ZERO_ONE.value
    scaler = FeatureScaler(cfg.scaling)
    Xh = _homogeneous(scaler.fit_transform(data.X))
    q = Xh.shape[1]
    big_m = _big_m_column(Xh, cfg)
    widened = int(np.count_nonzero(big_m > cfg.big_m))
    if widened:
        logger.debug(f"{name} trainer: big-M raised above {cfg.big_m:g} for {widened} points")

    solution = solve_milp(_zero_one_problem(Xh, data.y, big_m, cfg, majority), node_limit=cfg.node_limit)
    if not solution.is_optimal:
        logger.warning(f"{name} trainer: MILP infeasible after {solution.nodes_explored} nodes")
        return TrainReport(name, None, None, None, feasible=False, nodes_explored=solution.nodes_explored)

    scaled = solution.values[:q]
    violations = 1.0 - data.y * (Xh @ scaled)
    slack = float(np.max(np.abs(violations)))
    valid = bool(np.all(violations <= big_m * (1.0 + BIG_M_RTOL)))
    if not valid:
        logger.warning(f"{name} trainer: margin violation {slack:.6g} exceeds the per-point big-M; "
                       f"the count may be off")
    elif slack > cfg.big_m:
        logger.warning(f"{name} trainer: margin slack {slack:.6g} exceeds the configured big-M {cfg.big_m:g}; "
                       f"inputs may be mis-scaled")

    classifier = LinearClassifier(scaler.unscale(scaled))
    risk = risk_vector_01(classifier, data)
    objective = float(solution.objective_value)
    if risk.total_errors > objective:
        logger.warning(f"{name} trainer: {risk.total_errors} misclassified points but solver counted {objective:g}")
    elif risk.total_errors < objective:
        logger.debug(f"{name} trainer: {objective - risk.total_errors:g} counted points lie inside the unit margin "
                     f"but are classified correctly")
    logger.info(f"{name} trainer: objective {objective:g} after {solution.nodes_explored} nodes")
    return TrainReport(name, classifier, risk, objective, True, solution.nodes_explored, slack, valid,
                       extra={"big_m_widened": widened, "big_m_max": float(big_m.max())})


def train_01(data: Dataset, cfg: Optional[TrainConfig] = None) -> TrainReport:
    """Exact 0-1 loss minimization via the big-M MILP"""
    return _train_milp(data, cfg, majority=False)


def train_majority_01(data: Dataset, cfg: Optional[TrainConfig] = None) -> TrainReport:
    """0-1 loss minimization with per-class errors kept below half the class size"""
    return _train_milp(data, cfg, majority=True)


def _tangent_directions(normal: np.ndarray, on_plane: np.ndarray) -> List[np.ndarray]:
    """Directions in the plane orthogonal to ``normal`` that split the points lying on the hyperplane in every way"""
    p = normal.size
    if p == 1:
        return []
    # orthonormal basis of the complement of the normal
    basis = np.linalg.svd(normal.reshape(1, -1))[2][1:]
    if p == 2:
        return [basis[0], -basis[0]]
    coords = on_plane @ basis.T
    angles = []
    for a, b in combinations(range(len(coords)), 2):
        diff = coords[a] - coords[b]
        if np.linalg.norm(diff) > 1e-12:
            # boundary where the two points tie: t orthogonal to diff
            theta = math.atan2(diff[1], diff[0]) + math.pi / 2
            angles.extend([theta % (2 * math.pi), (theta + math.pi) % (2 * math.pi)])
    angles = sorted(set(angles)) or [0.0]
    mids = []
    for k, theta in enumerate(angles):
        nxt = angles[(k + 1) % len(angles)] + (2 * math.pi if k + 1 == len(angles) else 0.0)
        mids.append((theta + nxt) / 2)
    return [math.cos(t) * basis[0] + math.sin(t) * basis[1] for t in mids]


def _candidate_directions(X: np.ndarray) -> List[np.ndarray]:
    N, p = X.shape
    directions = [np.eye(p)[j] for j in range(p)]
    if p == 1:
        return directions
    for subset in combinations(range(N), p):
        diffs = X[list(subset[1:])] - X[subset[0]]
        if np.linalg.matrix_rank(diffs, tol=1e-12) < p - 1:
            continue
        normal = np.linalg.svd(diffs)[2][-1]
        projections = X @ normal
        level = projections[subset[0]]
        on_plane = np.abs(projections - level) <= 1e-9 * (1 + np.abs(level))
        distinct = np.unique(np.round(projections, 12))
        gap = np.min(np.diff(distinct)) if distinct.size > 1 else 1.0
        for tangent in _tangent_directions(normal, X[on_plane]):
            spread = 2 * np.max(np.abs(X @ tangent)) + 1e-300
            eps = 0.25 * gap / spread
            direction = normal + eps * tangent
            directions.append(direction / np.linalg.norm(direction))
    return directions


def _threshold_candidates(q: np.ndarray, y: np.ndarray):
    """All (orientation, threshold, errors_pos, errors_neg) for thresholds on projections q"""
    values = np.unique(q)
    pos_at = np.array([np.count_nonzero((q == v) & (y == POSITIVE)) for v in values])
    neg_at = np.array([np.count_nonzero((q == v) & (y == NEGATIVE)) for v in values])
    # threshold index k: values[:k] below, values[k:] above
    pos_below = np.concatenate([[0], np.cumsum(pos_at)])
    neg_below = np.concatenate([[0], np.cumsum(neg_at)])
    n_pos, n_neg = pos_below[-1], neg_below[-1]
    thresholds = np.concatenate([[values[0] - 1.0], (values[:-1] + values[1:]) / 2, [values[-1] + 1.0]])
    for k, theta in enumerate(thresholds):
        # orientation +1 predicts positive above the threshold
        yield 1.0, theta, int(pos_below[k]), int(n_neg - neg_below[k])
        yield -1.0, theta, int(n_pos - pos_below[k]), int(neg_below[k])


def brute_force_01(data: Dataset, majority: bool = False, pessimistic: bool = False,
                   reference: Optional[Dataset] = None) -> TrainReport:
    """Exact minimal 0-1 count by enumerating every combinatorially distinct separator"""
    data.require_both_classes()
    N, p = data.X.shape
    if p > BRUTE_FORCE_MAX_P or N > BRUTE_FORCE_MAX_N:
        raise GuardViolationError(
            f"Brute force limited to p <= {BRUTE_FORCE_MAX_P} and N <= {BRUTE_FORCE_MAX_N}, got p={p}, N={N}")
    if pessimistic and reference is None:
        raise ValueError("Pessimistic selection needs a reference dataset")
    limit_pos, limit_neg = majority_limit(data.n_pos), majority_limit(data.n_neg)

    best_count = math.inf
    optima: List[np.ndarray] = []
    examined = 0
    for direction in _candidate_directions(data.X):
        q = data.X @ direction
        for sign, theta, err_pos, err_neg in _threshold_candidates(q, data.y):
            examined += 1
            if majority and (err_pos > limit_pos or err_neg > limit_neg):
                continue
            count = err_pos + err_neg
            if count > best_count:
                continue
            weights = np.append(sign * direction, -sign * theta)
            if count < best_count:
                best_count = count
                optima = [weights]
            elif pessimistic:
                optima.append(weights)

    name = "brute_force_majority" if majority else "brute_force"
    if not optima:
        return TrainReport(name, None, None, None, feasible=False, nodes_explored=examined)

    chosen = optima[0]
    if pessimistic:
        scores = [max_risk(risk_vector_01(LinearClassifier(w), reference)) for w in optima]
        chosen = optima[int(np.argmax(scores))]
    classifier = LinearClassifier(chosen)
    risk = risk_vector_01(classifier, data)
    logger.debug(f"Brute force examined {examined} separators, optimum {best_count}")
    return TrainReport(name, classifier, risk, float(best_count), nodes_explored=examined)


TRAINERS: Dict[str, Callable[[Dataset, Optional[TrainConfig]], TrainReport]] = {
    TrainerId.HINGE.value: train_hinge,
    TrainerId.ZERO_ONE.value: train_01,
    TrainerId.MAJORITY.value: train_majority_01,
}


def get_trainer(name: str) -> Callable[[Dataset, Optional[TrainConfig]], TrainReport]:
    """Factory function to get a trainer by id"""
    try:
        return TRAINERS[TrainerId(name).value]
    except ValueError:
        raise ConfigError(f"Unknown trainer: {name}")


def train(name: str, data: Dataset, cfg: Optional[TrainConfig] = None) -> TrainReport:
    return get_trainer(name)(data, cfg)
