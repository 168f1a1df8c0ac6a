"""Large-sample covariances, the drift Wald test and related closed forms.

Scaling conventions: ``sqrt(n h) (beta_hat - beta)`` has covariance
``sigma_beta`` and ``sqrt(n) (vech(Sigma_hat) - vech(Sigma))`` has
covariance ``cov_vech_sigma``.  Drift coordinates are ordered
``(vec(B), b)`` with ``vec`` column-major; diffusion coordinates follow
:func:`mdpde.linalg.vech_pairs`.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve
from scipy.special import gammaincc

from .exceptions import SingularMatrixError
from .linalg import (
    basis_S,
    cholesky_spd,
    logdet_from_chol,
    sym_sqrt,
    symmetrize,
    trace_product,
    vech_pairs,
)


def _spd_inverse(m, name):
    try:
        factor = cho_factor(m, lower=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"{name} is singular or indefinite") from None
    if np.min(np.abs(np.diag(factor[0]))) ** 2 <= 1e-14 * np.max(np.abs(np.diag(m))):
        raise SingularMatrixError(f"{name} is numerically singular")
    return symmetrize(cho_solve(factor, np.eye(m.shape[0])))


def affine_design_moment(path):
    """``mean(z z')`` over ``z_i = (X_{i-1}, 1)``."""
    prev = path.points[:-1]
    z = np.column_stack([prev, np.ones(prev.shape[0])])
    return z.T @ z / prev.shape[0]


def b_matrix_hat(path, params, which=None):
    """Empirical drift information ``mean_i J_i' Sigma^{-1} J_i``.

    ``J_i`` is the Jacobian of ``B x + b`` in ``(vec(B), b)`` at
    ``X_{i-1}``, which makes the matrix ``kron(mean(z z'), Sigma^{-1})``.
    ``which`` optionally selects the free drift coordinates (the others
    are treated as known) and returns the matching sub-block.
    """
    chol = cholesky_spd(symmetrize(params.sigma), "sigma")
    d = chol.shape[0]
    sigma_inv = symmetrize(cho_solve((chol, True), np.eye(d)))
    info = np.kron(affine_design_moment(path), sigma_inv)
    if which is not None:
        idx = np.asarray(which)
        info = info[np.ix_(idx, idx)]
    return info


def b_matrix_from_jacobians(jacobians, sigma):
    """Same quantity for an arbitrary drift given ``(n, d, p)`` Jacobians."""
    jac = np.asarray(jacobians, dtype=float)
    chol = cholesky_spd(symmetrize(sigma), "sigma")
    white = np.linalg.solve(chol, jac)  # L^{-1} J_i, batched
    return np.einsum("nij,nik->jk", white, white) / jac.shape[0]


def sigma_beta_factor(alpha, d):
    """Efficiency loss ``(1+alpha)^(d+2) / (1+2 alpha)^(d/2+1)`` of the drift estimator."""
    return (1 + alpha) ** (d + 2) / (1 + 2 * alpha) ** (d / 2 + 1)


def sigma_beta(b_hat, alpha, d):
    """Limit covariance of the drift estimator, ``factor * b_hat^{-1}``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    b_hat = symmetrize(b_hat)
    return sigma_beta_factor(alpha, d) * _spd_inverse(b_hat, "drift information")


def chi2_sf(x, df):
    """Upper tail of the chi-square law via the regularized incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * x))


def wald_test(beta_hat, beta_null, sigma_beta_hat, n, h):
    """Wald statistic ``n h (b - b0)' S^{-1} (b - b0)`` and its chi-square p-value."""
    diff = np.asarray(beta_hat, dtype=float) - np.asarray(beta_null, dtype=float)
    cov = symmetrize(sigma_beta_hat)
    try:
        factor = cho_factor(cov, lower=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("drift covariance is singular or indefinite") from None
    stat = float(n * h * diff @ cho_solve(factor, diff))
    stat = max(stat, 0.0)
    return stat, chi2_sf(stat, diff.size)


def _a_matrices(sigma0):
    chol = cholesky_spd(symmetrize(sigma0), "sigma0")
    d = chol.shape[0]
    return [cho_solve((chol, True), basis_S(k, l, d)) for k, l in vech_pairs(d)]


def xi_ell_matrices(sigma0, alpha):
    """Score variance ``Xi`` and Hessian ``L`` for the diffusion estimator.

    Built entrywise from ``A_kl = Sigma0^{-1} S_kl`` with

    ``Xi = c [alpha^2 tr(A_kl) tr(A_rs) + tr(A_kl A_rs) / 2] - alpha^2/4 tr(A_kl) tr(A_rs)``,
    ``c = (1+alpha)^(d+2) (1+2 alpha)^(-d/2-2)``, and

    ``L = alpha^2 / (4 (1+alpha)) tr(A_kl) tr(A_rs) + tr(A_kl A_rs) / (2 (1+alpha))``.

    Both are normalized so that the common factor ``(1+alpha)^(d/2) |Sigma0|^(alpha/2)``
    of the raw score and Hessian has been divided out.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    a_mats = _a_matrices(sigma0)
    d = a_mats[0].shape[0]
    m = len(a_mats)
    c = (1 + alpha) ** (d + 2) * (1 + 2 * alpha) ** (-d / 2 - 2)
    traces = np.array([np.trace(a) for a in a_mats])
    xi = np.empty((m, m))
    ell = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            tt = traces[i] * traces[j]
            tp = trace_product(a_mats[i], a_mats[j])
            xi[i, j] = xi[j, i] = c * (alpha**2 * tt + 0.5 * tp) - 0.25 * alpha**2 * tt
            ell[i, j] = ell[j, i] = (0.25 * alpha**2 * tt + 0.5 * tp) / (1 + alpha)
    return xi, ell


def cov_vech_sigma(xi, ell):
    """Sandwich ``L^{-T} Xi L^{-1}`` using a Cholesky factorization of ``L``."""
    ell = np.asarray(ell, dtype=float)
    try:
        factor = cho_factor(ell, lower=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("Hessian matrix L is singular or indefinite") from None
    left = cho_solve(factor, np.asarray(xi, dtype=float))  # L^{-1} Xi (L symmetric)
    return symmetrize(cho_solve(factor, left.T).T)


def joint_covariance(sigma_beta_mat, cov_vs):
    """Block-diagonal joint limit covariance of ``(beta, vech(Sigma))``."""
    return block_diag(np.asarray(sigma_beta_mat, float), np.asarray(cov_vs, float))


def psi_limit(sigma, sigma0, alpha):
    """Population limit of the diffusion part of the contrast.

    ``(1+alpha)^(-d/2) |S|^(-alpha/2) - (1+1/alpha) |S|^(-alpha/2) |I + alpha L0 S^{-1} L0|^(-1/2)``
    with ``L0`` the symmetric square root of ``sigma0``.
    """
    return _psi(sigma, sigma0, alpha, gradient=False)


def psi_gradient(sigma, sigma0, alpha):
    """Gradient of :func:`psi_limit` in vech coordinates (off-diagonals move both cells)."""
    return _psi(sigma, sigma0, alpha, gradient=True)[1]


def _psi(sigma, sigma0, alpha, gradient):
    if not alpha > 0:
        raise ValueError("psi_limit needs alpha > 0")
    chol = cholesky_spd(symmetrize(sigma), "sigma")
    cholesky_spd(symmetrize(sigma0), "sigma0")
    root0 = sym_sqrt(sigma0)
    d = chol.shape[0]
    sigma_inv = symmetrize(cho_solve((chol, True), np.eye(d)))
    tilt = np.eye(d) + alpha * root0 @ sigma_inv @ root0
    tilt_chol = cholesky_spd(symmetrize(tilt), "tilt")
    det_term = np.exp(-0.5 * alpha * logdet_from_chol(chol))
    k = np.exp(-0.5 * logdet_from_chol(tilt_chol))
    c1 = (1 + alpha) ** (-d / 2)
    c3 = 1 + 1 / alpha
    value = c1 * det_term - c3 * det_term * k
    if not gradient:
        return float(value)
    inner = sigma_inv @ root0 @ cho_solve((tilt_chol, True), root0) @ sigma_inv
    gmat = -0.5 * alpha * det_term * (c1 - c3 * k) * sigma_inv - 0.5 * alpha * c3 * det_term * k * inner
    gmat = symmetrize(gmat)
    grad = np.array([gmat[a, a] if a == b else 2 * gmat[a, b] for a, b in vech_pairs(d)])
    return float(value), grad


def tilted_gaussian_moments(M, B, C, alpha):
    """Closed-form ``E[w]``, ``E[Z'BZ w]``, ``E[(Z'BZ)(Z'CZ) w]`` for ``w = exp(-alpha/2 Z'MZ)``.

    ``Z`` is standard normal.  With ``Q = I + alpha M`` these are
    ``|Q|^{-1/2}``, ``|Q|^{-1/2} tr(B Q^{-1})`` and
    ``|Q|^{-1/2} [tr(B Q^{-1}) tr(C Q^{-1}) + 2 tr(B Q^{-1} C Q^{-1})]``.
    """
    M = symmetrize(M)
    d = M.shape[0]
    q = np.eye(d) + alpha * M
    q_chol = cholesky_spd(q, "I + alpha M")
    m0 = float(np.exp(-0.5 * logdet_from_chol(q_chol)))
    bq = cho_solve((q_chol, True), np.asarray(B, float).T).T  # B Q^{-1}
    cq = cho_solve((q_chol, True), np.asarray(C, float).T).T
    tb, tc = np.trace(bq), np.trace(cq)
    m1 = m0 * tb
    m2 = m0 * (tb * tc + 2 * trace_product(bq, cq))
    return m0, float(m1), float(m2)


@dataclass
class InferenceReport:
    b_hat: np.ndarray
    sigma_beta: np.ndarray
    wald_stat: float
    wald_df: int
    wald_pvalue: float
    xi: np.ndarray
    ell: np.ndarray
    cov_vech_sigma: np.ndarray
    joint_cov: np.ndarray

    def to_dict(self):
        out = {}
        for key, val in asdict(self).items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def inference_report(path, params, alpha, beta_null=None):
    """Plug-in asymptotic quantities at fitted parameters.

    ``beta_null`` defaults to zero (no drift).
    """
    d = params.dim
    b_hat = b_matrix_hat(path, params)
    s_beta = sigma_beta(b_hat, alpha, d)
    if beta_null is None:
        beta_null = np.zeros(d * d + d)
    stat, pval = wald_test(params.beta, beta_null, s_beta, path.n, path.h)
    xi, ell = xi_ell_matrices(params.sigma, alpha)
    cov_vs = cov_vech_sigma(xi, ell)
    return InferenceReport(
        b_hat=b_hat,
        sigma_beta=s_beta,
        wald_stat=stat,
        wald_df=d * d + d,
        wald_pvalue=pval,
        xi=xi,
        ell=ell,
        cov_vech_sigma=cov_vs,
        joint_cov=joint_covariance(s_beta, cov_vs),
    )
