"""Degree-class mean-field dynamics of the four-state spreading model.

States per degree class k: ignorant ``i``, active ``a``, indifferent ``r`` and
quiet ``q``. Two fixed-step schemes are available:

``"transition"`` (default)
    the discrete-time update built from the per-step transition
    probabilities: an ignorant vertex of degree k notices the item with
    probability ``1 - (1 - dt*lam*Theta_k)**k``. It stays inside [0, 1] for
    any admissible step, which matters for large cutoffs.
``"euler"``
    the explicit Euler step of the rate equations. It raises
    :class:`InstabilityError` once a fraction leaves the unit interval.

Both converge to the same ODE as ``dt -> 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .ensemble import CorrelationKernel, DegreeDistribution, moments
from .exceptions import DomainError, InstabilityError, NoOutbreakError

SCHEMES = ("transition", "euler")


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    lam: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "lam"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def rho(self) -> float:
        return self.alpha * self.lam / self.beta


@dataclass
class DegreeStateField:
    """Per-class fractions; rows of a batch share the degree axis."""

    i: np.ndarray
    a: np.ndarray
    r: np.ndarray
    q: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.i, self.a, self.r, self.q = (np.array(x, dtype=float) for x in
                                          (self.i, self.a, self.r, self.q))
        total = self.i + self.a + self.r + self.q
        if np.abs(total - 1.0).max() > 1e-9:
            raise DomainError("state fractions must sum to one in every degree class")
        for x in (self.i, self.a, self.r, self.q):
            if x.min() < -1e-12 or x.max() > 1 + 1e-12:
                raise DomainError("state fractions must lie in [0, 1]")
            np.clip(x, 0.0, 1.0, out=x)

    @classmethod
    def seeded(cls, dist: DegreeDistribution, n: int = 10_000) -> "DegreeStateField":
        """One seed vertex smeared over the classes in proportion to P(k): a_k = 1/n."""
        a = np.full(dist.size, 1.0 / n)
        z = np.zeros(dist.size)
        return cls(1.0 - a, a, z, z.copy())

    @classmethod
    def seed_in_class(cls, dist: DegreeDistribution, k: int, n: int = 10_000) -> "DegreeStateField":
        """One seed vertex of degree ``k``; the class fraction is capped at 1."""
        a = np.zeros(dist.size)
        idx = dist.index_of(k)
        a[idx] = min(1.0, 1.0 / (n * dist.weights[idx]))
        z = np.zeros(dist.size)
        return cls(1.0 - a, a, z, z.copy())

    def aggregate(self, weights: np.ndarray) -> dict:
        return {name: float(np.dot(getattr(self, name), weights)) for name in "iarq"}


@dataclass
class SolveReport:
    prevalence: float
    iterations: int
    final: DegreeStateField
    trajectory: dict = field(default_factory=dict)
    dt: float = 0.01

    @property
    def efficiency(self) -> float:
        return efficiency_from_iterations(self)

    def to_dict(self) -> dict:
        return {"prevalence": self.prevalence, "iterations": self.iterations,
                "efficiency": self.efficiency, "dt": self.dt}


def efficiency_from_iterations(report) -> float:
    """Spreading efficiency measured as the reciprocal iteration count."""
    iterations = report if isinstance(report, (int, np.integer)) else report.iterations
    if iterations < 1:
        raise DomainError("efficiency needs at least one iteration")
    return 1.0 / iterations


def _integrate(dist, state, alpha, lam, beta, dt, tol, max_steps, scheme, *,
               cond=None, theta=0.0, record_every=0):
    """Advance a batch of states until each row's active mass drops below ``tol``.

    ``state`` is a tuple of (B, K) arrays. With ``cond`` the drive is the full
    matrix product ``P(k'|k) a_k'``; otherwise the theta-mix split drive.
    Returns final arrays, per-row iteration counts and the aggregate
    trajectory of row 0 when ``record_every`` is positive.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if not 0 < dt <= 0.1:
        raise DomainError(f"dt must lie in (0, 0.1], got {dt}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    i, a, r, q = (np.array(x, dtype=float, order="C") for x in state)
    nrows = i.shape[0]

    def rows(x):
        return np.ascontiguousarray(np.broadcast_to(np.asarray(x, dtype=float).reshape(-1), (nrows,)))

    alpha, lam, beta, theta = rows(alpha), rows(lam), rows(beta), rows(theta)
    use_matrix = cond is not None
    cond = np.ascontiguousarray(cond if use_matrix else np.zeros((1, 1)), dtype=float)
    iters, status, bad, traj = _kernels.integrate_rows(
        i, a, r, q, dist.degrees.astype(float), np.ascontiguousarray(dist.weights),
        cond, np.ascontiguousarray(dist.excess()), theta, alpha, lam, beta, float(dt),
        float(tol), int(max_steps), _kernels.EULER if scheme == "euler" else _kernels.TRANSITION,
        use_matrix, int(record_every))
    if status == _kernels.UNSTABLE:
        raise InstabilityError(f"fractions left [0, 1] in row {bad} at step {iters[bad]}; "
                               "reduce dt")
    names = ("t", "i", "a", "r", "q")
    trajectory = {name: traj[:, j].copy() for j, name in enumerate(names)} if record_every else {}
    return (i, a, r, q), iters, trajectory


def _prepare(init, dist, n):
    if init is None:
        init = DegreeStateField.seeded(dist, n)
    if init.i.shape[-1] != dist.size:
        raise DomainError("initial state does not match the kernel's degree classes")
    return tuple(np.atleast_2d(x) for x in (init.i, init.a, init.r, init.q))


def _report(out, iterations, traj, weights, dt):
    i, a, r, q = (x[0] for x in out)
    final = DegreeStateField(i, a, r, q, time=int(iterations[0]) * dt)
    # residual actives end up quiet, so the aware fraction 1 - i is the limit
    prevalence = float((r + q + a) @ weights)
    return SolveReport(prevalence, int(iterations[0]), final, traj, dt)


def solve_naive(kernel: CorrelationKernel, params: ModelParams,
                init: DegreeStateField | None = None, dt: float = 0.01,
                tol: float = 1e-7, *, n: int = 10_000, scheme: str = "transition",
                record_every: int = 1, max_steps: int = 10_000_000) -> SolveReport:
    """Integrate the four-state system with the full conditional matrix P(k'|k)."""
    dist = kernel.base
    state = _prepare(init, dist, n)
    out, iters, traj = _integrate(dist, state, params.alpha, params.lam, params.beta, dt, tol,
                                  max_steps, scheme, cond=kernel.conditional(),
                                  record_every=record_every)
    return _report(out, iters, traj, dist.weights, dt)


def solve_correlated(kernel: CorrelationKernel, params: ModelParams,
                     init: DegreeStateField | None = None, dt: float = 0.01,
                     tol: float = 1e-7, *, n: int = 10_000, scheme: str = "transition",
                     record_every: int = 1, max_steps: int = 10_000_000) -> SolveReport:
    """Integrate the theta-mix system using the split drive
    ``(1 - theta) sum_k' q(k') a_k' + theta a_k``.
    """
    dist = kernel.base
    state = _prepare(init, dist, n)
    out, iters, traj = _integrate(dist, state, params.alpha, params.lam, params.beta, dt, tol,
                                  max_steps, scheme, theta=kernel.theta,
                                  record_every=record_every)
    return _report(out, iters, traj, dist.weights, dt)


def solve_batch(dist: DegreeDistribution, a0: np.ndarray, alpha, lam, beta, theta,
                dt: float = 0.01, tol: float = 1e-7, scheme: str = "transition",
                max_steps: int = 10_000_000):
    """Solve many theta-mix systems sharing a degree law in one vectorized pass.

    ``a0`` is (B, K) initial active fractions (ignorants fill the rest);
    parameters broadcast to B rows. Returns ``(prevalence, iterations)``.
    """
    a0 = np.atleast_2d(np.asarray(a0, dtype=float))
    nrows = a0.shape[0]
    theta = np.broadcast_to(np.asarray(theta, dtype=float).reshape(-1), (nrows,))
    if np.any((theta < 0) | (theta >= 1)):
        raise DomainError("theta must lie in [0, 1)")
    zeros = np.zeros_like(a0)
    state = (1.0 - a0, a0, zeros, zeros.copy())
    out, iters, _ = _integrate(dist, state, alpha, lam, beta, dt, tol, max_steps, scheme,
                               theta=theta)
    i = out[0]
    return 1.0 - i @ dist.weights, iters


def seed_rows(dist: DegreeDistribution, runs: int | None, n: int, seed: int):
    """Initial active fractions for the run average.

    ``runs`` seed classes are drawn from P(k); identical classes are merged
    and weighted by multiplicity. ``runs=None`` smears one seed over all
    classes. Returns ``(a0 rows, weights)``.
    """
    if not runs:
        return np.full((1, dist.size), 1.0 / n), np.ones(1)
    rng = np.random.default_rng(seed)
    idx = rng.choice(dist.size, size=runs, p=dist.weights)
    uniq, counts = np.unique(idx, return_counts=True)
    a0 = np.zeros((uniq.size, dist.size))
    a0[np.arange(uniq.size), uniq] = np.minimum(1.0, 1.0 / (n * dist.weights[uniq]))
    return a0, counts / counts.sum()


@dataclass
class SweepResult:
    grid_name: str
    grid: np.ndarray
    prevalence: np.ndarray
    efficiency: np.ndarray
    seed_mass: float

    def to_rows(self):
        for g, p, e in zip(self.grid, self.prevalence, self.efficiency):
            yield {self.grid_name: float(g), "prevalence": float(p), "efficiency": float(e)}


def _averaged(dist, grid_a, grid_th, lam, beta, runs, n, seed, dt, tol, scheme):
    a0, w = seed_rows(dist, runs, n, seed)
    g = grid_a.size
    rows_a0 = np.tile(a0, (g, 1))
    alpha = np.repeat(grid_a, a0.shape[0])
    theta = np.repeat(grid_th, a0.shape[0])
    prev, iters = solve_batch(dist, rows_a0, alpha, lam, beta, theta, dt, tol, scheme)
    prev = prev.reshape(g, -1) @ w
    eff = (1.0 / np.maximum(iters, 1)).reshape(g, -1) @ w
    return prev, eff


def sweep_alpha(kernel: CorrelationKernel, alphas, lam: float = 1.0, beta: float = 0.3,
                runs: int | None = 100, n: int = 10_000, seed: int = 0, dt: float = 0.01,
                tol: float = 1e-7, scheme: str = "transition") -> SweepResult:
    """Prevalence and efficiency over a grid of activation probabilities."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size == 0:
        raise DomainError("empty alpha grid")
    ModelParams(float(alphas.max()), lam, beta)
    ModelParams(float(alphas.min()), lam, beta)
    prev, eff = _averaged(kernel.base, alphas, np.full(alphas.size, kernel.theta), lam, beta,
                          runs, n, seed, dt, tol, scheme)
    return SweepResult("alpha", alphas, prev, eff, 1.0 / n)


def sweep_theta(dist: DegreeDistribution, thetas, params: ModelParams,
                runs: int | None = 100, n: int = 10_000, seed: int = 0, dt: float = 0.01,
                tol: float = 1e-7, scheme: str = "transition") -> SweepResult:
    """Prevalence and efficiency over a grid of correlation strengths."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size == 0:
        raise DomainError("empty theta grid")
    prev, eff = _averaged(dist, np.full(thetas.size, params.alpha), thetas, params.lam,
                          params.beta, runs, n, seed, dt, tol, scheme)
    return SweepResult("theta", thetas, prev, eff, 1.0 / n)


ONSET_LEVEL = 0.05


def detect_threshold(grid, prevalence, level: float = ONSET_LEVEL) -> float:
    """First grid value whose prevalence exceeds ``level``; ``nan`` if none does."""
    grid = np.asarray(grid)
    hit = np.nonzero(np.asarray(prevalence) > level)[0]
    return float(grid[hit[0]]) if hit.size else math.nan


def predict_tau(params: ModelParams, rho_c: float) -> float:
    """Growth time scale (1/beta) / (rho/rho_c - 1) of the active fraction."""
    ratio = params.rho / rho_c if rho_c > 0 else math.inf
    if ratio <= 1:
        raise NoOutbreakError(f"rho={params.rho:.4g} does not exceed rho_c={rho_c:.4g}")
    return (1.0 / params.beta) / (ratio - 1.0)


def efficiency_scale_free(params: ModelParams, gamma: float) -> float:
    """Continuum efficiency (alpha lam (gamma-2) - beta (gamma-3)) / (gamma-3) for gamma > 3."""
    if gamma <= 2:
        raise DomainError("gamma must exceed 2")
    if gamma <= 3:
        return math.inf
    return (params.alpha * params.lam * (gamma - 2) - params.beta * (gamma - 3)) / (gamma - 3)


@dataclass(frozen=True)
class ScalingReport:
    """Predicted proportionality form of the final prevalence.

    ``slope`` is the expected slope of ``log P`` against ``abscissa(rho)``.
    """

    gamma: float
    regime: str
    rho: np.ndarray
    values: np.ndarray
    slope: float
    rho_c: float

    def abscissa(self, rho=None) -> np.ndarray:
        rho = self.rho if rho is None else np.asarray(rho, dtype=float)
        if self.regime == "gamma=3":
            return 1.0 / rho
        if self.regime == "2<gamma<3":
            return np.log(rho)
        return np.log1p(-self.rho_c / rho)


def predict_prevalence_scaling(gamma: float, rho_grid, rho_c: float | None = None) -> ScalingReport:
    rho = np.asarray(rho_grid, dtype=float)
    if gamma <= 2:
        raise DomainError("gamma must exceed 2")
    if rho_c is None:
        rho_c = (gamma - 3.0) / (gamma - 2.0) if gamma > 3 else 0.0
    if 2 < gamma < 3:
        slope = 1.0 / (3.0 - gamma)
        return ScalingReport(gamma, "2<gamma<3", rho, rho ** slope, slope, 0.0)
    if gamma == 3:
        return ScalingReport(gamma, "gamma=3", rho, np.exp(-1.0 / rho), -1.0, 0.0)
    if gamma == 4:
        raise DomainError("gamma = 4 carries logarithmic corrections; no plain power form")
    if np.any(rho <= rho_c):
        raise NoOutbreakError("scaling forms above gamma=3 need rho > rho_c")
    slope = 1.0 / (gamma - 3.0) if gamma < 4 else 1.0
    regime = "3<gamma<4" if gamma < 4 else "gamma>4"
    return ScalingReport(gamma, regime, rho, (1.0 - rho_c / rho) ** slope, slope, rho_c)


def final_size_uncorrelated(dist: DegreeDistribution, params: ModelParams) -> float:
    """Final prevalence of the vanishing-seed limit on an uncorrelated kernel.

    Solves ``phi = (alpha/beta)(1 - sum_k q(k) exp(-lam k phi))`` for its
    nontrivial root and returns ``sum_k P(k)(1 - exp(-lam k phi))``; zero
    below threshold.
    """
    q = dist.excess()
    k = dist.degrees.astype(float)
    s = params.alpha / params.beta

    def f(phi):
        return s * (1.0 - np.dot(q, np.exp(-params.lam * k * phi))) - phi

    if params.rho * moments(dist)[2] <= 1.0:
        return 0.0
    hi = s
    # f > 0 just above 0 when supercritical; shrink lo until that holds
    lo = hi
    while f(lo) <= 0 and lo > 1e-300:
        lo *= 1e-3
    if f(lo) <= 0:
        return 0.0
    phi = brentq(f, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    return float(np.dot(dist.weights, -np.expm1(-params.lam * k * phi)))
