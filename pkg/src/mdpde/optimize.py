"""BFGS with backtracking line search for small smooth problems."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NumericalFailure

_ARMIJO = 1e-4
_MAX_HALVINGS = 60
_EPS = np.finfo(float).eps


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def grad_norm(self):
        return float(np.max(np.abs(self.grad)))


def _safe_eval(fun, x):
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = fun(x)
    except (DomainError, FloatingPointError, np.linalg.LinAlgError, ValueError):
        return np.inf, None
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return np.inf, None
    return f, g


def bfgs(fun, x0, grad_tol=1e-8, step_tol=1e-10, max_iters=500):
    """Minimize ``fun`` from ``x0``.

    ``fun(x)`` returns ``(value, gradient)``.  A step is accepted when it
    satisfies the Armijo condition or, once the decrease is below rounding
    level, when it leaves the value unchanged to rounding while reducing
    the gradient norm.  Trial points where ``fun`` raises
    :class:`DomainError` or returns non-finite values are treated as
    ``+inf`` and the step is shortened.

    Stops when ``max|grad| <= grad_tol`` (converged), when an accepted
    step is shorter than ``step_tol`` in max-norm, when no acceptable step
    exists, or after ``max_iters`` iterations.  ``trace`` holds
    ``(iteration, value, max|grad|)`` for the start and every accepted step.
    """
    x = np.array(x0, dtype=float)
    f, g = _safe_eval(fun, x)
    if g is None:
        raise NumericalFailure("objective is not finite at the starting point", [])
    gnorm = float(np.max(np.abs(g)))
    trace = [(0, float(f), gnorm)]
    hinv = np.eye(x.size)
    scaled = False
    it = 0
    while gnorm > grad_tol and it < max_iters:
        direction = -hinv @ g
        slope = float(g @ direction)
        if not slope < 0:
            hinv = np.eye(x.size)
            scaled = False
            direction = -g
            slope = float(g @ direction)

        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            x_new = x + t * direction
            f_new, g_new = _safe_eval(fun, x_new)
            if g_new is not None:
                if f_new <= f + _ARMIJO * t * slope:
                    accepted = True
                elif abs(f_new - f) <= 8 * _EPS * max(1.0, abs(f)):
                    accepted = np.max(np.abs(g_new)) < gnorm
                if accepted:
                    break
            t *= 0.5
        if not accepted:
            break

        it += 1
        step = x_new - x
        y = g_new - g
        sy = float(step @ y)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        trace.append((it, float(f), gnorm))
        if sy > 1e-12 * np.linalg.norm(step) * np.linalg.norm(y):
            if not scaled:
                hinv = np.eye(x.size) * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            hy = hinv @ y
            hinv = (
                hinv
                - rho * (np.outer(step, hy) + np.outer(hy, step))
                + (rho * rho * float(y @ hy) + rho) * np.outer(step, step)
            )
        if np.max(np.abs(step)) < step_tol:
            break

    return OptimizeOutcome(x, float(f), g, it, gnorm <= grad_tol, trace)
