"""Minimum density power divergence fit of ``(B, b, Sigma)``.

The optimizer works on ``x = (vec(B), b, logchol(Sigma))``: the drift
coordinates are used as-is and the diffusion matrix goes through the
log-Cholesky map, so every iterate is SPD.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InitializationError
from .linalg import log_chol_gradient, spd_from_log_chol, spd_to_log_chol, symmetrize, vech
from .objective import DiffusionParams, _evaluate, vech_gradient
from .optimize import bfgs
from .simulate import DriftAffine


@dataclass(frozen=True)
class MdpdeConfig:
    """Settings for :func:`fit`.

    ``init`` is ``"ols"`` or a :class:`DiffusionParams` starting point.
    With ``multistart`` the fit is repeated from five deterministic
    perturbations of the start and the lowest objective wins.
    """

    alpha: float = 0.0
    max_iters: int = 500
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    init: object = "ols"
    multistart: bool = False

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha!r}")
        if not (self.grad_tol > 0 and self.step_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not (self.init == "ols" or isinstance(self.init, DiffusionParams)):
            raise ValueError("init must be 'ols' or a DiffusionParams instance")


@dataclass
class FitResult:
    params: DiffusionParams
    objective: float
    iterations: int
    converged: bool
    grad_norm: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def theta(self):
        """``(beta, vech(Sigma))`` as one flat vector."""
        return np.concatenate([self.params.beta, vech(self.params.sigma)])


def ols_init(path):
    """Least-squares drift and residual covariance of the regression form.

    Regresses ``dX / h`` on ``(X_prev, 1)``; the diffusion estimate is the
    maximum likelihood covariance ``sum R R' / (n h)`` of the Euler
    residuals, floored to SPD if needed.
    """
    n, d = path.n, path.dim
    if n < d + 2:
        raise InitializationError(f"need at least {d + 2} increments, got {n}")
    prev = path.points[:-1]
    design = np.column_stack([prev, np.ones(n)])
    if np.linalg.matrix_rank(design) < d + 1:
        raise InitializationError(
            "regression design is rank deficient; pass a DiffusionParams as init"
        )
    inc = path.increments()
    coef, *_ = np.linalg.lstsq(design, inc, rcond=None)
    coef = coef / path.h
    drift = DriftAffine(coef[:d].T, coef[d])
    resid = inc - drift(prev) * path.h
    sigma = symmetrize(resid.T @ resid / (n * path.h))
    return DiffusionParams(drift, _floor_spd(sigma))


def _floor_spd(sigma):
    d = sigma.shape[0]
    w, v = np.linalg.eigh(sigma)
    floor = 1e-8 * np.trace(sigma) / d
    if floor <= 0:
        floor = 1e-8
    if w[0] >= floor:
        return sigma
    w = np.maximum(w, floor)
    return symmetrize((v * w) @ v.T)


def pack(params):
    return np.concatenate([params.beta, spd_to_log_chol(params.sigma)])


def unpack(x, d):
    p = d * d + d
    return DiffusionParams(DriftAffine.from_beta(x[:p], d), spd_from_log_chol(x[p:]))


def _make_target(path, alpha):
    d = path.dim
    p = d * d + d
    prev, inc, h = path.points[:-1], path.increments(), path.h

    def target(x):
        B = x[: d * d].reshape((d, d), order="F")
        value, grad_B, grad_b, gmat = _evaluate(
            prev, inc, h, B, x[d * d : p], spd_from_log_chol(x[p:]), alpha
        )
        grad_chol = log_chol_gradient(x[p:], vech_gradient(gmat))
        return value, np.concatenate([grad_B.ravel(order="F"), grad_b, grad_chol])

    return target


def _start_points(path, start, multistart):
    if not multistart:
        return [start]
    d = start.dim
    drift = start.drift
    return [
        start,
        DiffusionParams(drift, 0.25 * start.sigma),
        DiffusionParams(drift, 4.0 * start.sigma),
        DiffusionParams(DriftAffine(0.5 * drift.B, 0.5 * drift.b), start.sigma),
        DiffusionParams(
            DriftAffine(np.zeros((d, d)), path.increments().mean(axis=0) / path.h),
            start.sigma,
        ),
    ]


def fit(path, cfg=None):
    """Minimize the average contrast over ``(B, b, Sigma)``.

    Non-convergence is reported through ``converged=False``; a non-finite
    objective at the start raises :class:`NumericalFailure`.
    """
    cfg = cfg or MdpdeConfig()
    start = ols_init(path) if cfg.init == "ols" else cfg.init
    if start.dim != path.dim:
        raise ValueError("initial parameters do not match the path dimension")
    target = _make_target(path, cfg.alpha)
    best = None
    for params0 in _start_points(path, start, cfg.multistart):
        out = bfgs(
            target,
            pack(params0),
            grad_tol=cfg.grad_tol,
            step_tol=cfg.step_tol,
            max_iters=cfg.max_iters,
        )
        if best is None or (out.converged, -out.fun) > (best.converged, -best.fun):
            best = out
    return FitResult(
        params=unpack(best.x, path.dim),
        objective=best.fun,
        iterations=best.iterations,
        converged=best.converged,
        grad_norm=best.grad_norm,
        trace=best.trace,
    )
