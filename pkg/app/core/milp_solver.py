"""Depth-first branch and bound over binary variables of an LpProblem"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Tuple
import logging
import math

import numpy as np

from app.core.errors import NodeLimitExceededError, SolverError
from app.core.lp_solver import LpProblem, LpStatus, solve_lp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
DEFAULT_NODE_LIMIT = 10 ** 6


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class MilpProblem:
    """LP relaxation plus the indices of variables restricted to {0, 1}"""
    relaxation: LpProblem
    binary_mask: FrozenSet[int]

    def __init__(self, relaxation: LpProblem, binary_mask: Iterable[int]):
        mask = frozenset(int(j) for j in binary_mask)
        object.__setattr__(self, "relaxation", relaxation)
        object.__setattr__(self, "binary_mask", mask)
        for j in mask:
            if not 0 <= j < relaxation.n:
                raise ValueError(f"Binary index {j} outside 0..{relaxation.n - 1}")
            if relaxation.lower[j] < 0 or relaxation.upper[j] > 1:
                raise ValueError(f"Binary variable {j} must have bounds inside [0, 1]")

    @property
    def binaries(self) -> np.ndarray:
        return np.array(sorted(self.binary_mask), dtype=int)

    def has_integral_objective(self) -> bool:
        """True when the objective only weighs binaries with integer coefficients"""
        c = self.relaxation.objective
        continuous = np.ones(c.size, dtype=bool)
        continuous[self.binaries] = False
        if np.any(c[continuous] != 0):
            return False
        return bool(np.all(c[self.binaries] == np.round(c[self.binaries])))


@dataclass(frozen=True)
class MilpSolution:
    status: MilpStatus
    values: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    nodes_explored: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == MilpStatus.OPTIMAL


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    parent_bound: float
    depth: int = 0


class BranchAndBound:
    """Most-fractional branching, depth-first search, incumbent pruning"""

    def __init__(self, problem: MilpProblem, node_limit: int = DEFAULT_NODE_LIMIT):
        self.problem = problem
        self.node_limit = node_limit
        self.integral = problem.has_integral_objective()
        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_objective = math.inf
        self.nodes_explored = 0

    def _pruned(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        if self.integral:
            return math.ceil(bound - PRUNE_TOL) >= self.incumbent_objective
        return bound >= self.incumbent_objective - PRUNE_TOL

    def _accept(self, values: np.ndarray, objective: float) -> None:
        if self.integral:
            objective = float(round(objective))
        if objective < self.incumbent_objective - PRUNE_TOL:
            self.incumbent = values
            self.incumbent_objective = objective
            logger.debug(f"New incumbent {objective:.6g} after {self.nodes_explored} nodes")

    def _integer_point(self, node: _Node, values: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
        """Snap near-integral binaries and re-solve the continuous part"""
        binaries = self.problem.binaries
        rounded = np.round(values[binaries])
        if np.all(values[binaries] == rounded):
            return values, float(self.problem.relaxation.objective @ values)
        lower = node.lower.copy()
        upper = node.upper.copy()
        lower[binaries] = rounded
        upper[binaries] = rounded
        fixed = solve_lp(self.problem.relaxation.with_bounds(lower, upper))
        if fixed.status != LpStatus.OPTIMAL:
            return None
        snapped = fixed.values.copy()
        snapped[binaries] = rounded
        return snapped, fixed.objective_value

    def solve(self) -> MilpSolution:
        relaxation = self.problem.relaxation
        binaries = self.problem.binaries
        stack: List[_Node] = [_Node(relaxation.lower.copy(), relaxation.upper.copy(), -math.inf)]

        while stack:
            node = stack.pop()
            if self._pruned(node.parent_bound):
                continue
            self.nodes_explored += 1
            if self.nodes_explored > self.node_limit:
                raise NodeLimitExceededError(
                    f"Branch and bound exceeded the node limit of {self.node_limit}",
                    nodes_explored=self.nodes_explored - 1,
                    incumbent=self.incumbent,
                    incumbent_objective=None if self.incumbent is None else self.incumbent_objective)

            lp = solve_lp(relaxation.with_bounds(node.lower, node.upper))
            if lp.status == LpStatus.INFEASIBLE:
                continue
            if lp.status == LpStatus.UNBOUNDED:
                raise SolverError("LP relaxation is unbounded below; the MILP objective must be bounded")
            bound = lp.objective_value
            if self._pruned(bound):
                continue

            values = lp.values
            fractional = np.abs(values[binaries] - np.round(values[binaries]))
            if binaries.size == 0 or fractional.max() <= INT_TOL:
                point = self._integer_point(node, values) if binaries.size else (values, bound)
                if point is not None:
                    self._accept(*point)
                    continue
                if fractional.max() == 0:
                    continue
                position = int(np.argmax(fractional))
            else:
                # most fractional: closest to one half, ties by lowest index
                position = int(np.argmin(np.abs(values[binaries] - np.floor(values[binaries]) - 0.5)))
            j = int(binaries[position])

            down = _Node(node.lower.copy(), node.upper.copy(), bound, node.depth + 1)
            down.upper[j] = 0.0
            up = _Node(node.lower.copy(), node.upper.copy(), bound, node.depth + 1)
            up.lower[j] = 1.0
            # the child nearer the relaxed value is explored first
            if values[j] > 0.5:
                stack.extend([down, up])
            else:
                stack.extend([up, down])

        logger.debug(f"Branch and bound finished after {self.nodes_explored} nodes")
        if self.incumbent is None:
            return MilpSolution(MilpStatus.INFEASIBLE, nodes_explored=self.nodes_explored)
        return MilpSolution(MilpStatus.OPTIMAL, self.incumbent, self.incumbent_objective, self.nodes_explored)


def solve_milp(problem: MilpProblem, node_limit: int = DEFAULT_NODE_LIMIT) -> MilpSolution:
    """Provably optimal solution of a binary MILP, or an Infeasible verdict"""
    return BranchAndBound(problem, node_limit).solve()
