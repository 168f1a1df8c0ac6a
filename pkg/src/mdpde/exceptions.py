"""Exception types raised by the package."""

import numpy as np


class DomainError(ValueError):
    """A matrix argument is outside the admissible domain (e.g. not SPD)."""


class SimulationDiverged(RuntimeError):
    """A simulated path produced non-finite values."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"simulation diverged at step {step}")


class InitializationError(RuntimeError):
    """The least-squares warm start could not be computed."""


class NumericalFailure(RuntimeError):
    """The objective became non-finite during optimization.

    The partial iteration trace is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        self.trace = list(trace or [])
        super().__init__(message)


class SingularMatrixError(np.linalg.LinAlgError):
    """An information or covariance matrix is singular."""
