"""Small dense symmetric-matrix helpers.

Half-vectorization uses the column-major lower-triangle order
``(s11, s21, ..., sd1, s22, ..., sdd)``.  Every flat index over the
distinct entries of a symmetric matrix in this package (the diffusion
gradient, the log-Cholesky parameters, the rows of the covariance
matrices built in :mod:`mdpde.inference`) follows :func:`vech_pairs`.

Indices are zero-based throughout.
"""

from functools import lru_cache

import numpy as np

from .exceptions import DomainError

PD_RTOL = 1e-12


def vech_length(d):
    return d * (d + 1) // 2


def dim_from_vech_length(m):
    d = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if vech_length(d) != m:
        raise ValueError(f"length {m} is not a triangular number")
    return d


@lru_cache(maxsize=None)
def vech_pairs(d):
    """Pairs ``(k, l)`` with ``k <= l`` in half-vectorization order.

    The j-th pair names the entry ``sigma[l, k]`` (equivalently
    ``sigma[k, l]``) stored at position j of ``vech(sigma)``.
    """
    return tuple((k, l) for k in range(d) for l in range(k, d))


@lru_cache(maxsize=None)
def _tril_indices(d):
    # column-major traversal of the lower triangle
    cols, rows = np.triu_indices(d)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def vech(m):
    """Stack the lower triangle of ``m`` column by column.

    >>> vech(np.array([[1.0, 0.5], [0.5, 0.7]]))
    array([1. , 0.5, 0.7])
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("vech expects a square matrix")
    rows, cols = _tril_indices(m.shape[0])
    return m[rows, cols].copy()


def unvech(v):
    """Inverse of :func:`vech`; returns a symmetric matrix."""
    v = np.asarray(v, dtype=float)
    d = dim_from_vech_length(v.size)
    rows, cols = _tril_indices(d)
    m = np.zeros((d, d))
    m[rows, cols] = v
    m[cols, rows] = v
    return m


def basis_S(k, l, d):
    """Symmetric basis matrix for the entry ``(k, l)``.

    ``E_kk`` when ``k == l`` and ``E_kl + E_lk`` otherwise, so that any
    symmetric ``H`` equals ``sum_j vech(H)[j] * basis_S(*vech_pairs(d)[j], d)``.
    """
    if not (0 <= k <= l < d):
        raise ValueError(f"need 0 <= k <= l < d, got k={k}, l={l}, d={d}")
    s = np.zeros((d, d))
    s[k, l] = 1.0
    s[l, k] = 1.0
    return s


def trace_product(a, b):
    """``tr(a @ b)`` without forming the product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValueError(f"non-conformable shapes {a.shape} and {b.shape}")
    return float(np.einsum("ij,ji->", a, b))


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def cholesky_spd(m, name="matrix"):
    """Lower Cholesky factor of ``m`` after a scale-invariant PD check.

    The check requires every pivot ``L[i, i]**2`` to exceed
    ``PD_RTOL * max(diag(m))``.

    Raises
    ------
    DomainError
        If ``m`` is not square, not finite, or not positive definite.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise DomainError(f"{name} is not positive definite") from None
    scale = np.max(np.diag(m))
    if np.min(np.diag(chol)) ** 2 <= PD_RTOL * scale:
        raise DomainError(f"{name} is numerically singular")
    return chol


def is_spd(m):
    try:
        cholesky_spd(m)
    except DomainError:
        return False
    return True


def spd_from_log_chol(params):
    """Map unconstrained parameters to an SPD matrix ``L @ L.T``.

    ``params`` fills the lower triangle of ``L`` in vech order, with the
    diagonal entries stored as logarithms.
    """
    params = np.asarray(params, dtype=float)
    if not np.all(np.isfinite(params)):
        raise ValueError("log-Cholesky parameters must be finite")
    chol = log_chol_factor(params)
    return chol @ chol.T


def log_chol_factor(params):
    params = np.asarray(params, dtype=float)
    d = dim_from_vech_length(params.size)
    rows, cols = _tril_indices(d)
    vals = np.where(rows == cols, np.exp(params), params)
    chol = np.zeros((d, d))
    chol[rows, cols] = vals
    return chol


def spd_to_log_chol(m):
    """Inverse of :func:`spd_from_log_chol`."""
    chol = cholesky_spd(m)
    rows, cols = _tril_indices(chol.shape[0])
    vals = chol[rows, cols]
    diag = rows == cols
    vals[diag] = np.log(vals[diag])
    return vals


def log_chol_gradient(params, grad_vech):
    """Chain rule from a vech-coordinate gradient to log-Cholesky coordinates.

    ``grad_vech[j]`` is the derivative with respect to the entry ``j`` of
    ``vech(Sigma)`` where an off-diagonal entry moves both mirrored cells.
    """
    chol = log_chol_factor(params)
    d = chol.shape[0]
    # symmetric matrix G with dF = tr(G dSigma)
    g = unvech(grad_vech)
    g[~np.eye(d, dtype=bool)] *= 0.5
    dchol = 2.0 * g @ chol
    rows, cols = _tril_indices(d)
    out = dchol[rows, cols]
    return np.where(rows == cols, out * chol[rows, cols], out)


def sym_sqrt(m):
    """Symmetric positive definite square root via eigendecomposition."""
    m = symmetrize(m)
    w, v = np.linalg.eigh(m)
    if w[0] <= PD_RTOL * max(w[-1], 0.0) or w[0] <= 0:
        raise DomainError("sym_sqrt requires a positive definite matrix")
    return symmetrize((v * np.sqrt(w)) @ v.T)


def logdet_from_chol(chol):
    return 2.0 * float(np.sum(np.log(np.diag(chol))))
