"""Degree-distribution algebra, correlation kernels and spectral thresholds.

Everything here works on the *occupied* degree set of a distribution: degree
classes with zero probability are dropped before any matrix is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DomainError


@dataclass(frozen=True)
class DegreeDistribution:
    """Discrete degree law over integer degrees.

    Use :meth:`power_law` for the truncated law ``P(k) = Z k^-gamma`` on
    ``[m, k_cut]`` (normalized by exact summation), :meth:`point_mass` for a
    regular ensemble, or :meth:`from_weights` for anything else.
    """

    degrees: np.ndarray
    weights: np.ndarray
    gamma: float | None = None
    m: int = 1
    k_cut: int = 1

    def __post_init__(self):
        degrees = np.asarray(self.degrees, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=float)
        if degrees.ndim != 1 or degrees.shape != weights.shape or degrees.size == 0:
            raise DomainError("degrees and weights must be non-empty 1-d arrays of equal length")
        if np.any(degrees < 1):
            raise DomainError("degrees must be positive integers")
        if np.any(np.diff(degrees) <= 0):
            raise DomainError("degrees must be strictly increasing")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {weights.sum()!r}, expected 1")
        if self.gamma is not None and not self.gamma > 2:
            raise DomainError(f"gamma must exceed 2 for a finite mean degree, got {self.gamma}")
        keep = weights > 0
        degrees, weights = degrees[keep], weights[keep]
        degrees.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "m", int(degrees[0]))
        object.__setattr__(self, "k_cut", int(degrees[-1]))

    @classmethod
    def power_law(cls, gamma: float, k_cut: int, m: int = 1) -> "DegreeDistribution":
        if not gamma > 2:
            raise DomainError(f"gamma must exceed 2 for a finite mean degree, got {gamma}")
        if m < 1 or k_cut < m:
            raise DomainError(f"need 1 <= m <= k_cut, got m={m}, k_cut={k_cut}")
        k = np.arange(m, k_cut + 1, dtype=float)
        w = k ** (-float(gamma))
        w /= w.sum()
        # renormalize once more so the sum is exact to the last ulp or two
        w /= w.sum()
        return cls(np.arange(m, k_cut + 1), w, gamma=float(gamma))

    @classmethod
    def point_mass(cls, k: int) -> "DegreeDistribution":
        return cls(np.array([k]), np.array([1.0]))

    @classmethod
    def from_weights(cls, degrees, weights) -> "DegreeDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(np.asarray(degrees), w / w.sum())

    @classmethod
    def from_config(cls, gamma: float, k_cut: int | None = None, m: int = 1,
                    n: int | None = None) -> "DegreeDistribution":
        """Power law with ``k_cut`` defaulting to the natural cutoff for ``n`` vertices."""
        if k_cut is None:
            if n is None:
                raise DomainError("either k_cut or n is required")
            k_cut = natural_cutoff(n, gamma)
        return cls.power_law(gamma, int(k_cut), m=m)

    @property
    def size(self) -> int:
        return self.degrees.size

    def prob(self, k: int) -> float:
        idx = self._index(k)
        return 0.0 if idx is None else float(self.weights[idx])

    def index_of(self, k: int) -> int:
        idx = self._index(k)
        if idx is None:
            raise IndexError(f"degree {k} is not in the occupied range [{self.m}, {self.k_cut}]")
        return idx

    def _index(self, k):
        if not self.m <= k <= self.k_cut:
            return None
        idx = int(np.searchsorted(self.degrees, k))
        if idx < self.size and self.degrees[idx] == k:
            return idx
        return None

    def excess(self) -> np.ndarray:
        """Excess-degree law q(k) = k P(k) / <k> over the occupied degrees."""
        kp = self.degrees * self.weights
        return kp / kp.sum()

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "m": self.m, "k_cut": self.k_cut}


def natural_cutoff(n: int, gamma: float) -> int:
    """Default k_cut tied to a graph of ``n`` vertices: ``3 * ceil(n ** (1/(gamma-1)))``."""
    return 3 * math.ceil(n ** (1.0 / (gamma - 1.0)))


def moments(dist: DegreeDistribution) -> tuple[float, float, float]:
    """Return ``(<k>, <k^2>, <k^2>/<k>)`` by exact summation."""
    k = dist.degrees.astype(float)
    mean_k = float(np.dot(k, dist.weights))
    mean_k2 = float(np.dot(k * k, dist.weights))
    return mean_k, mean_k2, mean_k2 / mean_k


def excess_degree(dist: DegreeDistribution, k: int) -> float:
    """q(k) = k P(k) / <k>; raises IndexError outside ``[m, k_cut]``."""
    if not dist.m <= k <= dist.k_cut:
        raise IndexError(f"degree {k} outside [{dist.m}, {dist.k_cut}]")
    mean_k = moments(dist)[0]
    return k * dist.prob(k) / mean_k


def threshold_uncorrelated(dist: DegreeDistribution) -> float:
    mean_k, mean_k2, _ = moments(dist)
    return mean_k / mean_k2


def threshold_continuum(gamma: float) -> float:
    """k_cut -> infinity limit of <k>/<k^2> for a pure power law with m = 1."""
    if gamma <= 2:
        raise DomainError("gamma must exceed 2")
    if gamma <= 3:
        return 0.0
    return (gamma - 3.0) / (gamma - 2.0)


def threshold_corollary(dist: DegreeDistribution, theta: float) -> float:
    """Approximate threshold 1 / ((<k^2>/<k>)(1 - theta)) for the theta-mix kernel.

    This is the first-order estimate, not the spectral value; for a finite
    cutoff the exact largest eigenvalue sits just above ``theta * k_cut``.
    """
    if not 0 <= theta < 1:
        raise DomainError("theta must lie in [0, 1)")
    return 1.0 / (moments(dist)[2] * (1.0 - theta))


@dataclass(frozen=True)
class CorrelationKernel:
    """Conditional degree law P(k'|k) = (1 - theta) q(k') + theta delta_{kk'}.

    ``theta == 0`` is the uncorrelated kernel.
    """

    base: DegreeDistribution
    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise DomainError(f"theta must lie in [0, 1), got {self.theta}")

    @property
    def kind(self) -> str:
        return "uncorrelated" if self.theta == 0 else "theta-mix"

    @property
    def degrees(self) -> np.ndarray:
        return self.base.degrees

    def conditional(self) -> np.ndarray:
        """Row-stochastic matrix ``M[k, k'] = P(k'|k)`` over the occupied degrees."""
        q = self.base.excess()
        mat = np.tile((1.0 - self.theta) * q, (q.size, 1))
        mat[np.diag_indices_from(mat)] += self.theta
        return mat

    def joint(self) -> np.ndarray:
        """P(k, k') = q(k) P(k'|k)."""
        return self.base.excess()[:, None] * self.conditional()

    def connectivity(self) -> "ConnectivityMatrix":
        k = self.degrees.astype(float)
        return ConnectivityMatrix(k[:, None] * self.conditional(), self.degrees,
                                  self.base.weights)

    def jacobian(self, alpha: float, lam: float, beta: float) -> "JacobianMatrix":
        return JacobianMatrix(self, alpha, lam, beta)

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d["theta"] = self.theta
        return d

    @classmethod
    def from_dict(cls, cfg: dict) -> "CorrelationKernel":
        dist = DegreeDistribution.from_config(cfg["gamma"], cfg.get("k_cut"),
                                              cfg.get("m", 1), cfg.get("n"))
        return cls(dist, float(cfg.get("theta", 0.0)))


@dataclass(frozen=True)
class ConnectivityMatrix:
    """C[k, k'] = k P(k'|k); ``weights`` carry P(k) for the symmetrization."""

    entries: np.ndarray
    degrees: np.ndarray
    weights: np.ndarray | None = None

    def symmetrized(self) -> np.ndarray | None:
        """``D^1/2 C D^-1/2`` with ``D = diag(P(k))`` when detailed balance makes it symmetric."""
        if self.weights is None:
            return None
        s = np.sqrt(self.weights)
        sym = s[:, None] * self.entries / s[None, :]
        scale = max(1.0, float(np.abs(sym).max()))
        if np.abs(sym - sym.T).max() > 1e-10 * scale:
            return None
        return 0.5 * (sym + sym.T)


@dataclass(frozen=True)
class JacobianMatrix:
    """Linearization L = alpha*lam*C - beta*I of the active-fraction dynamics."""

    kernel: CorrelationKernel
    alpha: float
    lam: float
    beta: float
    entries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("alpha", "lam", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be a probability, got {v}")
        c = self.kernel.connectivity().entries
        ent = self.alpha * self.lam * c - self.beta * np.eye(c.shape[0])
        object.__setattr__(self, "entries", ent)

    @property
    def rho(self) -> float:
        return self.alpha * self.lam / self.beta if self.beta > 0 else math.inf


def largest_eigenvalue(c: ConnectivityMatrix, tol: float = 1e-10,
                       max_iter: int = 500_000) -> float:
    """Spectral radius of a nonnegative connectivity matrix by power iteration.

    When detailed balance holds the iteration runs on the symmetrized matrix
    and stops once the eigen-residual ``||S v - mu v||`` falls below
    ``tol * mu``. Otherwise the plain iteration on ``C`` stops when successive
    estimates agree to ``tol``.
    """
    mat = c.entries
    if np.any(mat < 0) or not np.all(np.isfinite(mat)):
        raise DomainError("connectivity matrix must be finite and nonnegative")
    n = mat.shape[0]
    if n == 1:
        return float(mat[0, 0])
    sym = c.symmetrized()
    if sym is not None:
        # start from the Perron vector of the uncorrelated part: exact for rank one
        v = np.sqrt(c.weights) * c.degrees
        v = v / np.linalg.norm(v)
        mu = 0.0
        for _ in range(max_iter):
            w = sym @ v
            mu = float(v @ w)
            if mu <= 0:
                return mu
            resid = np.linalg.norm(w - mu * v)
            if resid <= tol * mu:
                return mu
            v = w / np.linalg.norm(w)
        raise ConvergenceError("power iteration did not converge", last=(mu, v))
    v = np.full(n, 1.0 / n)
    mu = 0.0
    for _ in range(max_iter):
        w = mat @ v
        s = w.sum()
        if s <= 0:
            return 0.0
        w /= s
        new_mu = float((mat @ w).sum())
        if abs(new_mu - mu) <= tol * abs(new_mu) and np.abs(w - v).max() <= tol ** 0.5:
            return new_mu
        mu, v = new_mu, w
    raise ConvergenceError("power iteration did not converge", last=(mu, v))


def threshold_correlated(c: ConnectivityMatrix) -> float:
    lam_m = largest_eigenvalue(c)
    if lam_m <= 0:
        raise DomainError(f"largest eigenvalue must be positive, got {lam_m}")
    return 1.0 / lam_m


def annd(kernel: CorrelationKernel, k: int) -> float:
    """Average nearest-neighbour degree sum_k' k' P(k'|k)."""
    idx = kernel.base._index(k)
    if idx is None:
        raise IndexError(f"degree {k} is not an occupied class of the kernel")
    return float(annd_table(kernel)[idx])


def annd_table(kernel: CorrelationKernel) -> np.ndarray:
    q = kernel.base.excess()
    k = kernel.degrees.astype(float)
    return (1.0 - kernel.theta) * float(np.dot(k, q)) + kernel.theta * k


def eigen_lower_bound(jac: JacobianMatrix) -> float:
    """Perron-Frobenius style lower bound on the square of the leading Jacobian eigenvalue.

    ``min_k beta^2 ((rho^2 knn_min - 2 rho) knn(k) + 1)``. Diagnostic only.
    """
    knn = annd_table(jac.kernel)
    beta = jac.beta
    if beta == 0:
        raise DomainError("the bound is expressed in units of beta and needs beta > 0")
    rho = jac.rho
    inner = (rho * rho * knn.min() - 2.0 * rho) * knn + 1.0
    return float(beta * beta * inner.min())
