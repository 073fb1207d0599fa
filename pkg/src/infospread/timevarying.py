"""Extended model with time-varying popularity and periodic activity.

Popularity ``alpha(t)`` is a Gamma density and contact activity ``lambda(t)``
a von Mises density of period ``C_p``.  In the linear (small seed) regime the
aggregate activation rate has the closed form

    da/dt = alpha(t) lambda(t) exp(s * Phi(t)) C,   Phi(t) = int_0^t alpha lambda,

where ``s`` is the spectral scale of the connectivity operator acting on the
seed profile (``s = 1`` is the classical form; for an uncorrelated kernel and
a uniform seed ``s = <k^2>/<k>``).  :func:`solve_extended` integrates the
underlying three-state degree-class system for cross-checks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from .ensemble import CorrelationKernel
from .exceptions import DomainError, InstabilityError
from .meanfield import DegreeStateField

TWO_PI = 2.0 * math.pi
MAX_NODES = 2_000_000
PARAM_NAMES = ("p", "eta", "z", "vartheta", "C_p", "C")

__all__ = [
    "TimeVaryingParams", "RateCurve", "ExtendedTrajectory",
    "alpha_gamma", "bessel_i0", "lambda_vonmises", "model_grid",
    "rate_eq21", "solve_extended", "matrix_exponential_check",
    "TABLE1_S1", "TABLE1_S2",
]


@dataclass(frozen=True)
class TimeVaryingParams:
    """The six shape parameters of the time-varying rate.

    Attributes
    ----------
    p, eta : float
        Gamma shape and scale of the popularity ``alpha(t)``.
    z, vartheta : float
        von Mises concentration and phase; ``vartheta`` is wrapped to
        ``[0, 2*pi)``.
    C_p : float
        Activity period in model time.
    C : float
        Amplitude set by the initial state and the topology.
    """

    p: float
    eta: float
    z: float
    vartheta: float
    C_p: float
    C: float

    def __post_init__(self):
        for name in ("p", "eta", "C_p", "C"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        for name in ("z", "vartheta"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        for name in PARAM_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0.0 <= self.vartheta < TWO_PI:
            object.__setattr__(self, "vartheta", self.vartheta % TWO_PI)

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, x) -> "TimeVaryingParams":
        return cls(*(float(v) for v in x))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TimeVaryingParams":
        unknown = set(d) - set(PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{n: d[n] for n in PARAM_NAMES})

    def canonical(self) -> "TimeVaryingParams":
        """Equivalent parameters with ``z >= 0``.

        ``(z, vartheta)`` and ``(-z, vartheta + pi)`` give the same activity
        profile, so only the canonical form is identifiable from data.
        """
        if self.z >= 0:
            return self
        return self.replace(z=-self.z, vartheta=(self.vartheta + math.pi) % TWO_PI)

    def replace(self, **kw) -> "TimeVaryingParams":
        d = self.to_dict()
        d.update(kw)
        return TimeVaryingParams(**d)


# Fitted rows for the two example series (video s1, link s2).
TABLE1_S1 = TimeVaryingParams(0.4677, 10.0662, 0.8443, 1.4631, 0.0395, 0.1586)
TABLE1_S2 = TimeVaryingParams(0.5157, 11.5924, -0.9050, 1.3159, 0.0493, 0.2382)


def alpha_gamma(t, p: float, eta: float):
    """Gamma density ``t**(p-1) exp(-t/eta) / (eta**p Gamma(p))``.

    At ``t = 0`` the value is ``inf`` for ``p < 1``, ``1/eta`` for ``p = 1``
    and ``0`` for ``p > 1``.
    """
    if not (p > 0 and eta > 0):
        raise DomainError("alpha_gamma needs p > 0 and eta > 0")
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = (p - 1.0) * np.log(t) - t / eta - p * math.log(eta) - special.gammaln(p)
        out = np.exp(logv)
    if p == 1.0:
        out = np.where(t == 0, 1.0 / eta, out)
    out = np.where(t < 0, 0.0, out)
    return out if out.ndim else float(out)


def bessel_i0(z: float, tol: float = 1e-15) -> float:
    """Modified Bessel function I0 by its power series ``sum (z^2/4)^k / (k!)^2``.

    Used for ``|z| <= 20``; larger arguments fall back to the exponentially
    scaled library routine.
    """
    z = abs(float(z))
    if z > 20.0:
        return float(special.i0e(z) * math.exp(z))
    x = 0.25 * z * z
    term = 1.0
    total = 1.0
    k = 0
    while term > tol * total:
        k += 1
        term *= x / (k * k)
        total += term
    return total


def _i0e(z: float) -> float:
    z = abs(float(z))
    if z > 20.0:
        return float(special.i0e(z))
    return bessel_i0(z) * math.exp(-z)


def lambda_vonmises(t, z: float, vartheta: float, C_p: float):
    """Periodic von Mises density ``exp(z cos(2 pi t/C_p - vartheta)) / (C_p I0(z))``."""
    if not C_p > 0:
        raise DomainError("C_p must be positive")
    t = np.asarray(t, dtype=float)
    out = np.exp(z * np.cos(TWO_PI * t / C_p - vartheta) - abs(z)) / (C_p * _i0e(z))
    return out if out.ndim else float(out)


def model_grid(n: int, step: float) -> np.ndarray:
    """Uniform grid ``(j + 1/2) * step``, ``j = 0..n-1`` (starts at half a step)."""
    return (np.arange(int(n)) + 0.5) * float(step)


@dataclass
class RateCurve:
    times: np.ndarray
    values: np.ndarray
    cumulative: np.ndarray

    def to_csv(self, path_or_buf) -> None:
        own = isinstance(path_or_buf, str)
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(fh)
            w.writerow(["t", "rate"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])
        finally:
            if own:
                fh.close()


def _check_grid(grid) -> tuple[np.ndarray, float]:
    t = np.asarray(grid, dtype=float).ravel()
    if t.size == 0:
        raise DomainError("empty time grid")
    if t[0] <= 0:
        raise DomainError("time grid must start after 0")
    if t.size == 1:
        return t, 2.0 * t[0]
    d = np.diff(t)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
        raise DomainError("time grid must be uniform and increasing")
    return t, float(d.mean())


def cumulative_activity(theta: TimeVaryingParams, grid, points_per_period: int = 200) -> np.ndarray:
    """``Phi(t) = int_0^t alpha(x) lambda(x) dx`` on a uniform grid.

    Product rule: on each sub-interval ``lambda`` is replaced by its linear
    interpolant and integrated against the exact Gamma mass and first moment
    (regularized incomplete gamma functions of order ``p`` and ``p + 1``).
    This integrates the ``t**(p-1)`` singularity exactly; the grid is subdivided so that each activity period
    holds at least ``points_per_period`` nodes.
    """
    t, h = _check_grid(grid)
    sub = max(1, int(math.ceil(points_per_period * h / theta.C_p)))
    if sub * t.size > MAX_NODES:
        raise DomainError("activity period too short for this grid (quadrature would need "
                          f"{sub * t.size} nodes)")
    n_head = max(1, int(math.ceil(sub * t[0] / h)))
    head = np.linspace(0.0, t[0], n_head + 1)
    body = t[0] + np.arange(1, (t.size - 1) * sub + 1) * (h / sub)
    nodes = np.concatenate([head, body])
    lam = lambda_vonmises(nodes, theta.z, theta.vartheta, theta.C_p)
    x = nodes / theta.eta
    dm = np.diff(special.gammainc(theta.p, x))
    # first moment of the Gamma mass on each sub-interval, measured from its left end
    dm1 = theta.p * theta.eta * np.diff(special.gammainc(theta.p + 1.0, x)) - nodes[:-1] * dm
    width = np.diff(nodes)
    incr = lam[:-1] * dm + (lam[1:] - lam[:-1]) * (dm1 / width)
    phi = np.cumsum(incr)[n_head - 1:]
    return phi[::sub]


def rate_eq21(theta: TimeVaryingParams, grid, spectral_scale: float = 1.0,
              points_per_period: int = 200) -> RateCurve:
    """Closed-form activation rate on a uniform grid starting after 0.

    Parameters
    ----------
    theta : TimeVaryingParams
    grid : array_like
        Uniform, increasing times with ``grid[0] > 0``.
    spectral_scale : float
        Multiplier of the exponent; 1 gives the classical closed form.
    points_per_period : int
        Minimum quadrature nodes per activity period for the running integral.
    """
    t, _ = _check_grid(grid)
    phi = cumulative_activity(theta, t, points_per_period)
    al = alpha_gamma(t, theta.p, theta.eta) * lambda_vonmises(t, theta.z, theta.vartheta, theta.C_p)
    values = al * np.exp(spectral_scale * phi) * theta.C
    return RateCurve(t, values, phi)


@dataclass
class ExtendedTrajectory:
    """Aggregates of the three-state system.

    ``t`` are step end times; ``rate_t`` the step midpoints at which the
    aggregate activation rate ``rate`` was evaluated.
    """

    t: np.ndarray
    i: np.ndarray
    a: np.ndarray
    r: np.ndarray
    rate_t: np.ndarray
    rate: np.ndarray
    final: DegreeStateField | None = None


def solve_extended(kernel: CorrelationKernel, theta: TimeVaryingParams,
                   init: DegreeStateField, dt: float, t_end: float,
                   t_start: float = 0.0, alpha_fn=None, lambda_fn=None) -> ExtendedTrajectory:
    """Explicit Euler for the three-state (ignorant/active/indifferent) system.

    ``alpha(t)`` and ``lambda(t)`` are evaluated at step midpoints, so the
    ``p < 1`` singularity at ``t = 0`` is never hit.  ``alpha`` is a density
    and may exceed 1, which drives the indifferent fraction negative in the
    linear regime; only the ignorant and active fractions are range-checked.

    Parameters
    ----------
    alpha_fn, lambda_fn : callable, optional
        Override the Gamma / von Mises profiles (e.g. ``lambda t: 0``).
    """
    if not 0 < dt <= 0.1:
        raise DomainError("dt must lie in (0, 0.1]")
    alpha_fn = alpha_fn or (lambda s: alpha_gamma(s, theta.p, theta.eta))
    lambda_fn = lambda_fn or (lambda s: lambda_vonmises(s, theta.z, theta.vartheta, theta.C_p))
    dist = kernel.base
    w = dist.weights
    k = dist.degrees.astype(float)
    cond = kernel.conditional()
    i = init.i.copy()
    a = init.a.copy()
    r = init.r.copy()
    n_steps = int(round((t_end - t_start) / dt))
    mids = t_start + (np.arange(n_steps) + 0.5) * dt
    al = np.asarray(alpha_fn(mids), dtype=float) * np.ones(n_steps)
    lm = np.asarray(lambda_fn(mids), dtype=float) * np.ones(n_steps)
    out = np.empty((n_steps + 1, 3))
    out[0] = (w @ i, w @ a, w @ r)
    rate = np.empty(n_steps)
    for n in range(n_steps):
        drive = lm[n] * k * i * (cond @ a)
        rate[n] = al[n] * (w @ drive)
        flow = dt * drive
        i -= flow
        a += al[n] * flow
        r += (1.0 - al[n]) * flow
        if i.min() < -1e-6 or a.max() > 1 + 1e-6:
            raise InstabilityError(f"state left [0, 1] at t={mids[n]:.6g}; reduce dt")
        out[n + 1] = (w @ i, w @ a, w @ r)
    final = DegreeStateField.__new__(DegreeStateField)
    final.i, final.a, final.r, final.q, final.time = i, a, r, np.zeros_like(i), t_end
    times = t_start + np.arange(n_steps + 1) * dt
    return ExtendedTrajectory(times, out[:, 0], out[:, 1], out[:, 2], mids, rate, final)


def _smooth_integrand(fn, m: int):
    """Integrand in ``u`` for ``t = u**m``; kills integrable endpoint singularities."""
    def g(u):
        if u <= 0.0:
            return 0.0
        v = float(fn(u ** m)) * m * u ** (m - 1)
        return v if np.isfinite(v) else 0.0
    return g


def matrix_exponential_check(kernel: CorrelationKernel, alpha_fn, lambda_fn, a0, t: float,
                             power: int = 4) -> float:
    """Sup-norm gap between two routes to ``a(t)`` of the linear system.

    Route (i) sums the exponential series of ``Phi(t) C`` applied to ``a0``
    with ``Phi`` by adaptive quadrature; route (ii) integrates
    ``a' = alpha(t) lambda(t) C a`` with an adaptive high-order Runge–Kutta
    method.  Both work in ``u = t**(1/power)`` so a ``t**(p-1)`` popularity
    singularity is harmless.
    """
    c = kernel.connectivity().entries
    if c.shape[0] > 10:
        raise DomainError("matrix_exponential_check is meant for kernels of side <= 10")
    a0 = np.asarray(a0, dtype=float)
    if t == 0:
        return 0.0
    prod = lambda s: alpha_fn(s) * lambda_fn(s)
    g = _smooth_integrand(prod, power)
    u_end = t ** (1.0 / power)
    phi, _ = integrate.quad(g, 0.0, u_end, epsabs=0.0, epsrel=1e-13, limit=2000)

    total = a0.copy()
    term = a0.copy()
    n = 0
    while True:
        n += 1
        term = phi * (c @ term) / n
        total += term
        if np.abs(term).max() <= 1e-17 * max(np.abs(total).max(), 1e-300) or n > 500:
            break

    sol = integrate.solve_ivp(lambda u, y: g(u) * (c @ y), (0.0, u_end), a0,
                              method="DOP853", rtol=1e-12, atol=1e-14)
    return float(np.abs(sol.y[:, -1] - total).max())
