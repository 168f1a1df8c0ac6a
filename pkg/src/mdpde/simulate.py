"""Euler-Maruyama simulation of affine-drift diffusions and additive contamination."""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import SimulationDiverged
from .linalg import sym_sqrt

#: Recorded in experiment metadata so replications know which stream produced the data.
RNG_ALGORITHM = "numpy PCG64 seeded via SeedSequence; normals by ziggurat"


def step_size(n):
    """Sampling interval ``n ** -0.55`` used by the simulation study."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return float(n) ** -0.55


@dataclass(frozen=True)
class DriftAffine:
    """Drift ``a(x) = B @ x + b``."""

    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float, ndmin=1)
        if B.shape != (b.size, b.size):
            raise ValueError(f"B has shape {B.shape} but b has length {b.size}")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(b))):
            raise ValueError("drift parameters must be finite")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.b.size

    def __call__(self, x):
        """Evaluate the drift at a point or at each row of an ``(m, d)`` array."""
        x = np.asarray(x, dtype=float)
        return x @ self.B.T + self.b

    @property
    def beta(self):
        """Flat drift parameter ``(vec(B), b)`` with ``vec`` column-major."""
        return np.concatenate([self.B.ravel(order="F"), self.b])

    @classmethod
    def from_beta(cls, beta, d):
        beta = np.asarray(beta, dtype=float)
        if beta.size != d * d + d:
            raise ValueError(f"beta must have length {d * d + d}, got {beta.size}")
        return cls(beta[: d * d].reshape((d, d), order="F"), beta[d * d :])


@dataclass(frozen=True)
class SamplePath:
    """Equally spaced observations; row ``i`` of ``points`` is the state at ``i * h``."""

    h: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("a sample path needs at least two observations")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"step size must be positive, got {self.h!r}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample path contains non-finite values")
        pts.setflags(write=False)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        """Number of increments."""
        return self.points.shape[0] - 1

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def times(self):
        return self.h * np.arange(self.n + 1)

    def increments(self):
        return np.diff(self.points, axis=0)

    def to_csv(self, path):
        """Write ``t, x1, ..., xd`` rows with 17 significant digits.

        ``path`` is a filename or an open text stream.
        """
        if hasattr(path, "write"):
            self._write_csv(path)
        else:
            with open(path, "w", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"x{j + 1}" for j in range(self.dim)])
        for t, row in zip(self.times, self.points):
            writer.writerow([format(v, ".17g") for v in (t, *row)])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "t":
                raise ValueError(f"{path}: expected header starting with 't'")
            data = np.array([[float(v) for v in row] for row in reader if row])
        if data.shape[0] < 2:
            raise ValueError(f"{path}: need at least two observations")
        steps = np.diff(data[:, 0])
        h = float(np.mean(steps))
        if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
            raise ValueError(f"{path}: observation times are not equally spaced")
        return cls(h, data[:, 1:])


@dataclass(frozen=True)
class ContaminationSpec:
    eps: float
    kappa: float
    seed: object = 0

    def __post_init__(self):
        if not 0 <= self.eps < 1:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")


def simulate_path(drift, sigma, x0, n, h, seed=None):
    """Simulate ``n`` Euler-Maruyama steps of ``dX = (B X + b) dt + Sigma^{1/2} dW``.

    Parameters
    ----------
    drift : DriftAffine
    sigma : (d, d) array
        Diffusion matrix. Must be SPD, or exactly zero for a noiseless path.
    x0 : (d,) array
    n : int
        Number of steps; the path has ``n + 1`` rows.
    h : float
    seed : int, SeedSequence or Generator
        Anything accepted by :func:`numpy.random.default_rng`.

    Raises
    ------
    SimulationDiverged
        If the path leaves the finite doubles; ``step`` is the first bad row.
    """
    d = drift.dim
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (d,))
    sigma = np.asarray(sigma, dtype=float)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not h > 0:
        raise ValueError(f"h must be positive, got {h!r}")
    if np.all(sigma == 0):
        noise = np.zeros((n, d))
    else:
        root = sym_sqrt(sigma)
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((n, d)) @ (np.sqrt(h) * root).T
    transition = np.eye(d) + h * drift.B
    shift = h * drift.b
    points = np.empty((n + 1, d))
    points[0] = x0
    x = points[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            x = transition @ x + shift + noise[i]
            points[i + 1] = x
    bad = ~np.all(np.isfinite(points), axis=1)
    if bad.any():
        raise SimulationDiverged(int(np.argmax(bad)))
    return SamplePath(h, points)


def contaminate(path, spec):
    """Add ``kappa * N(0, I)`` shocks to a random fraction ``eps`` of the rows.

    ``round(eps * (n + 1))`` rows (half-up rounding, initial row eligible)
    are drawn without replacement; all other rows are returned untouched.
    """
    m = contaminated_count(path.n + 1, spec.eps)
    if m == 0 or spec.kappa == 0:
        return path
    rng = np.random.default_rng(spec.seed)
    idx = rng.choice(path.n + 1, size=m, replace=False)
    points = path.points.copy()
    points[idx] += spec.kappa * rng.standard_normal((m, path.dim))
    return SamplePath(path.h, points)


def contaminated_count(n_points, eps):
    return int(np.floor(eps * n_points + 0.5))
