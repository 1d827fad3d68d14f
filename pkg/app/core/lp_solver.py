"""Dense two-phase simplex solver for min c.v s.t. A.v <= b, lo <= v <= hi"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.core.errors import DimensionMismatchError, NumericalInstabilityError

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """Linear program with inequality rows and per-variable bounds"""
    objective: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = np.array(self.A_ub, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        b = np.array(self.b_ub, dtype=float).reshape(-1)
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != n or A.shape[0] != b.size:
            raise DimensionMismatchError(
                f"Constraint matrix {A.shape} inconsistent with {n} variables and {b.size} right-hand sides")
        if lo.size != n or hi.size != n:
            raise DimensionMismatchError("Bounds must have one entry per variable")
        if np.any(lo > hi):
            raise ValueError("Every lower bound must be <= its upper bound")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("Bounds cannot exclude every real value")
        for name, value in (("objective", c), ("A_ub", A), ("b_ub", b)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        lo.setflags(write=False)
        hi.setflags(write=False)

    @classmethod
    def from_constraints(cls, objective: Sequence[float],
                         constraints: Sequence[Tuple[Sequence[float], float]],
                         bounds: Optional[Sequence[Tuple[float, float]]] = None) -> "LpProblem":
        """Build from (row, rhs) pairs meaning row.v <= rhs; bounds default to [0, inf)"""
        c = np.asarray(objective, dtype=float)
        n = c.size
        rows = np.array([row for row, _ in constraints], dtype=float).reshape(len(constraints), n)
        rhs = np.array([value for _, value in constraints], dtype=float)
        if bounds is None:
            bounds = [(0.0, np.inf)] * n
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        return cls(c, rows, rhs, lo, hi)

    @property
    def n(self) -> int:
        return self.objective.size

    @property
    def m(self) -> int:
        return self.b_ub.size

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LpProblem":
        return LpProblem(self.objective, self.A_ub, self.b_ub, lower, upper)

    def with_row(self, row: Sequence[float], rhs: float) -> "LpProblem":
        A = np.vstack([self.A_ub, np.asarray(row, dtype=float).reshape(1, -1)])
        return LpProblem(self.objective, A, np.append(self.b_ub, rhs), self.lower, self.upper)

    def max_violation(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        parts = [0.0]
        if self.m:
            parts.append(float(np.max(self.A_ub @ values - self.b_ub)))
        parts.append(float(np.max(self.lower - values)))
        parts.append(float(np.max(values - self.upper)))
        return max(parts)

    def scaled_residuals(self, values: np.ndarray) -> np.ndarray:
        """Row excess (A x - b)_i over 1 + |b_i| + |A_i|.|x|"""
        values = np.asarray(values, dtype=float)
        if not self.m:
            return np.zeros(0)
        excess = self.A_ub @ values - self.b_ub
        return excess / (1.0 + np.abs(self.b_ub) + np.abs(self.A_ub) @ np.abs(values))


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    values: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


class _StandardForm:
    """Maps the bounded problem onto u >= 0 with x = offset + T u"""

    def __init__(self, problem: LpProblem):
        n = problem.n
        lo, hi = problem.lower, problem.upper
        columns: List[np.ndarray] = []
        bound_rows: List[Tuple[int, float]] = []
        offset = np.zeros(n)
        for j in range(n):
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lo[j]) and lo[j] == hi[j]:
                offset[j] = lo[j]
            elif np.isfinite(lo[j]):
                offset[j] = lo[j]
                columns.append(unit)
                if np.isfinite(hi[j]):
                    bound_rows.append((len(columns) - 1, hi[j] - lo[j]))
            elif np.isfinite(hi[j]):
                offset[j] = hi[j]
                columns.append(-unit)
            else:
                # free variable split into positive and negative parts
                columns.append(unit)
                columns.append(-unit)
        self.offset = offset
        self.T = np.column_stack(columns) if columns else np.zeros((n, 0))
        k = self.T.shape[1]

        A = problem.A_ub @ self.T if problem.m else np.zeros((0, k))
        b = problem.b_ub - problem.A_ub @ offset if problem.m else np.zeros(0)
        if bound_rows:
            B = np.zeros((len(bound_rows), k))
            for r, (col, _) in enumerate(bound_rows):
                B[r, col] = 1.0
            A = np.vstack([A, B])
            b = np.concatenate([b, [width for _, width in bound_rows]])
        self.A = A
        self.b = b
        self.c = problem.objective @ self.T
        self.constant = float(problem.objective @ offset)

    def to_original(self, u: np.ndarray) -> np.ndarray:
        return self.offset + self.T @ u


class _Tableau:
    """Dense simplex tableau in canonical form with respect to ``basis``"""

    def __init__(self, A: np.ndarray, b: np.ndarray, n_structural: int):
        m = A.shape[0]
        self.n_structural = n_structural
        # row signs so every right-hand side is non-negative
        flip = b < 0
        signs = np.where(flip, -1.0, 1.0)
        slack = np.diag(signs) if m else np.zeros((0, 0))
        artificial_rows = np.flatnonzero(flip)
        artificial = np.zeros((m, artificial_rows.size))
        for col, row in enumerate(artificial_rows):
            artificial[row, col] = 1.0
        body = np.hstack([A * signs[:, None], slack, artificial])
        self.n_cols = body.shape[1]
        self.first_artificial = n_structural + m
        self.table = np.zeros((m + 1, self.n_cols + 1))
        self.table[:m, :self.n_cols] = body
        self.table[:m, -1] = b * signs
        self.basis = np.where(flip, self.first_artificial + np.cumsum(flip) - 1,
                              n_structural + np.arange(m)).astype(int)
        self.standard_matrix = np.hstack([A * signs[:, None], slack])
        self.standard_rhs = b * signs
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.table.shape[0] - 1

    def set_costs(self, costs: np.ndarray) -> None:
        costs = np.asarray(costs, dtype=float)
        m = self.m
        self.table[m, :self.n_cols] = costs - costs[self.basis] @ self.table[:m, :self.n_cols]
        self.table[m, -1] = -costs[self.basis] @ self.table[:m, -1]

    def pivot(self, row: int, col: int) -> None:
        table = self.table
        table[row] /= table[row, col]
        column = table[:, col].copy()
        column[row] = 0.0
        table -= np.outer(column, table[row])
        table[:, col] = 0.0
        table[row, col] = 1.0
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed: np.ndarray, degenerate_limit: int, max_iterations: int) -> LpStatus:
        m = self.m
        use_bland = False
        degenerate_streak = 0
        while True:
            if self.iterations >= max_iterations:
                raise NumericalInstabilityError(
                    f"Simplex exceeded {max_iterations} pivots without converging")
            reduced = self.table[m, :self.n_cols]
            candidates = np.flatnonzero(allowed & (reduced < -OPT_TOL))
            if candidates.size == 0:
                return LpStatus.OPTIMAL
            if use_bland:
                col = int(candidates[0])
            else:
                col = int(candidates[np.argmin(reduced[candidates])])
            column = self.table[:m, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = self.table[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            row = int(tied[np.argmin(self.basis[tied])])
            if best <= FEAS_TOL:
                degenerate_streak += 1
                if not use_bland and degenerate_streak > degenerate_limit:
                    logger.debug("Switching to Bland's rule after degenerate pivots")
                    use_bland = True
            else:
                degenerate_streak = 0
            self.pivot(row, col)

    def drop_artificials(self) -> None:
        """Pivot basic artificials out, delete redundant rows, then drop artificial columns"""
        keep_rows = []
        for row in range(self.m):
            if self.basis[row] < self.first_artificial:
                keep_rows.append(row)
                continue
            entries = np.abs(self.table[row, :self.first_artificial])
            nonzero = np.flatnonzero(entries > 1e-9)
            if nonzero.size:
                self.pivot(row, int(nonzero[np.argmax(entries[nonzero])]))
                keep_rows.append(row)
        if len(keep_rows) < self.m:
            logger.debug(f"Removed {self.m - len(keep_rows)} redundant rows")
        rows = np.array(keep_rows + [self.m], dtype=int)
        cols = np.concatenate([np.arange(self.first_artificial), [self.n_cols]])
        self.table = self.table[np.ix_(rows, cols)]
        self.basis = self.basis[keep_rows]
        self.standard_matrix = self.standard_matrix[keep_rows]
        self.standard_rhs = self.standard_rhs[keep_rows]
        self.n_cols = self.first_artificial

    def basic_solution(self) -> np.ndarray:
        values = np.zeros(self.n_cols)
        basic = self.table[:self.m, -1].copy()
        if self.m:
            # one refinement solve against the untouched standard-form columns
            B = self.standard_matrix[:, self.basis]
            try:
                refined = np.linalg.solve(B, self.standard_rhs)
                if np.all(np.isfinite(refined)) and np.max(np.abs(refined - basic)) < 1e-6 * (1 + np.max(np.abs(basic))):
                    basic = refined
            except np.linalg.LinAlgError:
                logger.debug("Basis matrix singular during refinement; keeping tableau values")
        values[self.basis] = basic
        return values


def solve_lp(problem: LpProblem, max_iterations: Optional[int] = None) -> LpSolution:
    """Solve an LpProblem with the two-phase simplex method"""
    form = _StandardForm(problem)
    k = form.c.size
    tableau = _Tableau(form.A, form.b, k)
    m = tableau.m
    degenerate_limit = 2 * (problem.n + problem.m)
    if max_iterations is None:
        max_iterations = 50 * (m + tableau.n_cols) + 1000

    if tableau.n_cols > tableau.first_artificial:
        phase_one = np.zeros(tableau.n_cols)
        phase_one[tableau.first_artificial:] = 1.0
        tableau.set_costs(phase_one)
        tableau.run(np.ones(tableau.n_cols, dtype=bool), degenerate_limit, max_iterations)
        infeasibility = -tableau.table[m, -1]
        if infeasibility > FEAS_TOL * (1.0 + np.max(np.abs(form.b), initial=0.0)):
            logger.debug(f"Phase one ended with infeasibility {infeasibility:.3e}")
            return LpSolution(LpStatus.INFEASIBLE, iterations=tableau.iterations)
        tableau.drop_artificials()

    costs = np.concatenate([form.c, np.zeros(tableau.n_cols - k)])
    tableau.set_costs(costs)
    status = tableau.run(np.ones(tableau.n_cols, dtype=bool), degenerate_limit, max_iterations)
    if status == LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tableau.iterations)

    u = tableau.basic_solution()[:k]
    scale = 1.0 + np.max(np.abs(u), initial=0.0)
    if np.min(u, initial=0.0) < -1e-7 * scale:
        raise NumericalInstabilityError(f"Basic solution has negative component {np.min(u):.3e}")
    u = np.maximum(u, 0.0)
    values = np.clip(form.to_original(u), problem.lower, problem.upper)

    residuals = problem.scaled_residuals(values)
    worst = float(np.max(residuals, initial=0.0))
    if worst > FEAS_TOL:
        row = int(np.argmax(residuals))
        raise NumericalInstabilityError(f"Returned point violates row {row} by {worst:.3e} relative to its magnitude")

    objective_value = float(problem.objective @ values)
    logger.debug(f"LP solved in {tableau.iterations} pivots, objective {objective_value:.6g}")
    return LpSolution(LpStatus.OPTIMAL, values, objective_value, tableau.iterations)
