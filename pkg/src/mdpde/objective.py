"""Density power divergence contrast for the local Gaussian (Euler) transition model.

For ``alpha > 0`` the per-increment contrast is

    V_i = (1+alpha)^(-d/2) |S|^(-alpha/2)
          - (1 + 1/alpha) |S|^(-alpha/2) exp(-(alpha/2) Q_i),

with ``Q_i = R_i' S^{-1} R_i / h`` and ``R_i`` the Euler residual.  At
``alpha = 0`` the Gaussian negative log-likelihood
``0.5 log|S| + 0.5 Q_i`` is used instead; constants in ``2 pi`` and ``h``
are dropped.  All values and gradients are averaged over the ``n``
increments.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .linalg import cholesky_spd, logdet_from_chol, symmetrize, vech_pairs
from .simulate import DriftAffine


@dataclass(frozen=True)
class DiffusionParams:
    """Affine drift plus diffusion matrix, ``theta = (beta, vech(sigma))``."""

    drift: DriftAffine
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float, ndmin=2)
        if sigma.shape != (self.drift.dim,) * 2:
            raise ValueError(f"sigma has shape {sigma.shape}, expected {(self.drift.dim,) * 2}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_arrays(cls, B, b, sigma):
        return cls(DriftAffine(B, b), sigma)

    @property
    def dim(self):
        return self.drift.dim

    @property
    def B(self):
        return self.drift.B

    @property
    def b(self):
        return self.drift.b

    @property
    def beta(self):
        return self.drift.beta


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    grad_beta: np.ndarray
    grad_vech_sigma: np.ndarray


def residuals(path, drift):
    """Euler residuals ``X_i - X_{i-1} - (B X_{i-1} + b) h`` as an ``(n, d)`` array."""
    prev = path.points[:-1]
    return path.points[1:] - prev - drift(prev) * path.h


def _check_alpha(alpha):
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha!r}")


def _solve_pieces(sigma):
    sigma = symmetrize(sigma)
    chol = cholesky_spd(sigma, "sigma")
    sigma_inv = cho_solve((chol, True), np.eye(chol.shape[0]), check_finite=False)
    return chol, symmetrize(sigma_inv)


def per_term_values(path, params, alpha):
    """The individual contrasts ``V_i`` (length ``n``)."""
    _check_alpha(alpha)
    chol, sigma_inv = _solve_pieces(params.sigma)
    resid = residuals(path, params.drift)
    q = np.einsum("ij,ij->i", resid @ sigma_inv, resid) / path.h
    logdet = logdet_from_chol(chol)
    if alpha == 0:
        return 0.5 * logdet + 0.5 * q
    d = path.dim
    scale = np.exp(-0.5 * alpha * logdet)
    with np.errstate(under="ignore"):
        weight = np.exp(-0.5 * alpha * q)
    return (1 + alpha) ** (-d / 2) * scale - (1 + 1 / alpha) * scale * weight


def objective(path, params, alpha, gradient=True):
    """Average contrast over the increments, with analytic gradients.

    Parameters
    ----------
    path : SamplePath
    params : DiffusionParams
    alpha : float
        Tuning parameter; 0 selects the Gaussian quasi-likelihood.
    gradient : bool
        If false the gradient fields are ``None``.

    Returns
    -------
    ObjectiveValue
        ``grad_beta`` is ordered as ``(vec(B), b)`` (``vec`` column-major);
        ``grad_vech_sigma[j]`` differentiates with respect to the j-th
        vech entry, moving both mirrored cells for off-diagonal entries.

    Raises
    ------
    DomainError
        If sigma is not SPD.
    ValueError
        If alpha is negative.
    """
    _check_alpha(alpha)
    value, grad_B, grad_b, gmat = _evaluate(
        path.points[:-1], path.increments(), path.h, params.B, params.b,
        params.sigma, alpha, gradient,
    )
    if not gradient:
        return ObjectiveValue(value, None, None)
    return ObjectiveValue(
        value,
        np.concatenate([grad_B.ravel(order="F"), grad_b]),
        vech_gradient(gmat),
    )


def vech_gradient(gmat):
    """Map a symmetric gradient ``G`` (``dF = tr(G dSigma)``) to vech coordinates."""
    d = gmat.shape[0]
    return np.array([gmat[k, k] if k == l else 2 * gmat[k, l] for k, l in vech_pairs(d)])


def _evaluate(prev, inc, h, B, b, sigma, alpha, gradient=True):
    """Core evaluation on raw arrays.

    Returns the value, the gradients with respect to ``B`` and ``b`` in
    matrix/vector form, and the symmetric matrix gradient ``G`` in
    ``Sigma`` (``dF = tr(G dSigma)``).
    """
    chol, sigma_inv = _solve_pieces(sigma)
    n, d = inc.shape
    resid = inc - (prev @ B.T + b) * h
    u = resid @ sigma_inv  # rows are Sigma^{-1} R_i
    q = np.einsum("ij,ij->i", u, resid) / h
    logdet = logdet_from_chol(chol)

    if alpha == 0:
        value = 0.5 * logdet + 0.5 * float(np.mean(q))
        weight = None
        beta_scale = 1.0
        det_coef = 0.5
        quad_coef = 0.5 / h
    else:
        scale = np.exp(-0.5 * alpha * logdet)
        c1 = (1 + alpha) ** (-d / 2) * scale
        c2 = (1 + 1 / alpha) * scale
        with np.errstate(under="ignore"):
            weight = np.exp(-0.5 * alpha * q)
        mean_weight = float(np.mean(weight))
        value = c1 - c2 * mean_weight
        beta_scale = (1 + alpha) * scale
        det_coef = 0.5 * alpha * (c2 * mean_weight - c1)
        quad_coef = 0.5 * alpha * c2 / h
    if not gradient:
        return float(value), None, None, None

    wu = u if weight is None else u * weight[:, None]
    grad_B = -beta_scale * (wu.T @ prev) / n
    grad_b = -beta_scale * np.sum(wu, axis=0) / n
    gmat = det_coef * sigma_inv - quad_coef * (wu.T @ u) / n
    return float(value), grad_B, grad_b, symmetrize(gmat)


def gradient_beta(path, params, alpha):
    return objective(path, params, alpha).grad_beta


def gradient_vech_sigma(path, params, alpha):
    return objective(path, params, alpha).grad_vech_sigma
