"""Error types shared across the resilience toolkit"""

from typing import Optional

import numpy as np


class ResilienceError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionMismatchError(ResilienceError, ValueError):
    pass


class EmptyClassError(ResilienceError, ValueError):
    pass


class InvalidBudgetError(ResilienceError, ValueError):
    pass


class DegenerateMeansError(ResilienceError, ValueError):
    pass


class CovarianceError(ResilienceError, ValueError):
    pass


class CsvFormatError(ResilienceError, ValueError):
    pass


class GuardViolationError(ResilienceError, ValueError):
    pass


class ConfigError(ResilienceError, ValueError):
    pass


class SolverError(ResilienceError, RuntimeError):
    """A solver could not produce a trustworthy verdict"""


class NumericalInstabilityError(SolverError):
    pass


class NodeLimitExceededError(SolverError):
    """Branch and bound stopped before proving optimality"""

    def __init__(self, message: str, nodes_explored: int,
                 incumbent: Optional[np.ndarray] = None,
                 incumbent_objective: Optional[float] = None):
        super().__init__(message)
        self.nodes_explored = nodes_explored
        self.incumbent = incumbent
        self.incumbent_objective = incumbent_objective


class TrainerInfeasibleError(ResilienceError):
    """The majority-constrained trainer found no feasible classifier"""
