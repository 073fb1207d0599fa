"""Fitting the time-varying rate to observed activity counts.

Observation ``i`` of a series binned every ``bin_hours`` real hours sits at
model time ``(i + 1/2) * bin_hours / time_scale`` (bin centres; the grid
starts half a bin after the origin).  Parameters are optimized in a
transformed space -- logarithms of ``p, eta, C_p, C``, raw ``z`` and the
phase ``vartheta`` wrapped back into ``[0, 2*pi)`` -- with multi-start
Levenberg–Marquardt.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import DomainError
from .lm import LMResult, lm_minimize
from .timevarying import PARAM_NAMES, TWO_PI, TimeVaryingParams, model_grid, rate_eq21

__all__ = [
    "FitProblem", "FitResult", "to_transformed", "from_transformed",
    "observation_times", "model_rate", "fit_theta", "relative_error",
    "SpreadingCurveRegressor", "RESTART_BOX",
]

DEFAULT_TIME_SCALE = 500.0
DEFAULT_BIN_HOURS = 0.5
N_PARAMS = 6
_LOG = np.array([True, True, False, False, True, True])

# multi-start sampling box: (low, high, log-uniform?)
RESTART_BOX = {
    "p": (0.1, 5.0, True),
    "eta": (0.01, 50.0, True),
    "z": (-3.0, 3.0, False),
    "vartheta": (0.0, TWO_PI, False),
    "C_p": (0.005, 0.5, True),
    "C": (0.001, 10.0, True),
}


def to_transformed(theta: TimeVaryingParams) -> np.ndarray:
    x = theta.to_array()
    return np.where(_LOG, np.log(np.where(_LOG, x, 1.0)), x)


def from_transformed(u) -> TimeVaryingParams:
    u = np.asarray(u, dtype=float)
    x = np.where(_LOG, np.exp(np.where(_LOG, u, 0.0)), u)
    return TimeVaryingParams.from_array(x)


def observation_times(n: int, bin_hours: float = DEFAULT_BIN_HOURS,
                      time_scale: float = DEFAULT_TIME_SCALE) -> np.ndarray:
    """Model times of ``n`` consecutive bin centres."""
    if time_scale <= 0 or bin_hours <= 0:
        raise DomainError("time_scale and bin_hours must be positive")
    return model_grid(n, bin_hours / time_scale)


def model_rate(theta: TimeVaryingParams, n: int, bin_hours: float = DEFAULT_BIN_HOURS,
               time_scale: float = DEFAULT_TIME_SCALE) -> np.ndarray:
    """Closed-form rate at the first ``n`` bin centres."""
    return rate_eq21(theta, observation_times(n, bin_hours, time_scale)).values


@dataclass
class FitProblem:
    """Observed series plus the time alignment used to fit it."""

    observed: np.ndarray
    time_scale: float = DEFAULT_TIME_SCALE
    bin_hours: float = DEFAULT_BIN_HOURS
    initial_theta: TimeVaryingParams | None = None

    def __post_init__(self):
        self.observed = np.asarray(self.observed, dtype=float).ravel()
        if self.observed.size < 2 * N_PARAMS:
            raise DomainError(f"need at least {2 * N_PARAMS} observations")
        if not np.all(np.isfinite(self.observed)):
            raise DomainError("observed series must be finite")
        if self.time_scale <= 0:
            raise DomainError("time_scale must be positive")

    @property
    def times(self) -> np.ndarray:
        return observation_times(self.observed.size, self.bin_hours, self.time_scale)

    @property
    def window(self) -> float:
        return self.observed.size * self.bin_hours / self.time_scale

    def residual_fn(self):
        t = self.times
        y = self.observed
        bad = np.full(y.size, 1e100)
        # periods shorter than two bins are below the sampling resolution
        min_log_period = math.log(2.0 * self.bin_hours / self.time_scale)

        def residual(u):
            if np.any(np.abs(u[_LOG]) > 700) or u[4] < min_log_period:
                return bad
            try:
                theta = from_transformed(u)
                with np.errstate(over="ignore", invalid="ignore"):
                    r = rate_eq21(theta, t).values - y
            except (DomainError, FloatingPointError, OverflowError, ValueError):
                return bad
            return r if np.all(np.isfinite(r)) else bad
        return residual


@dataclass
class FitResult:
    theta: TimeVaryingParams
    cost: float
    iterations: int
    converged: bool
    param_stderr: dict
    restarts_used: int
    flags: list = field(default_factory=list)
    attempts: list = field(default_factory=list)
    lm: LMResult | None = None

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.to_dict(),
            "stderr": self.param_stderr,
            "cost": self.cost,
            "iterations": self.iterations,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "flags": list(self.flags),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _stderr(theta: TimeVaryingParams, jac: np.ndarray | None, cost: float, n_obs: int):
    """Asymptotic errors from ``(J^T J)^-1 cost / (N - 6)``, mapped to natural units."""
    if jac is None or n_obs <= N_PARAMS:
        return {n: float("nan") for n in PARAM_NAMES}, True
    A = jac.T @ jac
    singular = np.linalg.cond(A) > 1e14
    cov = np.linalg.pinv(A) * cost / (n_obs - N_PARAMS)
    su = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    x = theta.to_array()
    s = np.where(_LOG, x * su, su)
    return {n: float(v) for n, v in zip(PARAM_NAMES, s)}, bool(singular)


def sample_starts(n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``n`` random starting points in transformed space from :data:`RESTART_BOX`."""
    out = []
    for _ in range(n):
        u = []
        for name in PARAM_NAMES:
            lo, hi, log = RESTART_BOX[name]
            u.append(rng.uniform(math.log(lo), math.log(hi)) if log else rng.uniform(lo, hi))
        out.append(np.array(u))
    return out


def fit_theta(problem: FitProblem, restarts: int = 32, seed: int = 0,
              max_iter: int = 200) -> FitResult:
    """Best-of-restarts LM fit of the six rate parameters.

    The first start is ``problem.initial_theta`` when given; the remaining
    ones are drawn from :data:`RESTART_BOX` with ``default_rng(seed)``.
    The best converged attempt wins; if none converged, the best attempt is
    returned with ``converged=False``.
    """
    if int(restarts) < 1:
        raise DomainError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    starts = []
    if problem.initial_theta is not None:
        starts.append(to_transformed(problem.initial_theta))
    starts += sample_starts(int(restarts) - len(starts), rng)
    fun = problem.residual_fn()
    best = None
    attempts = []
    for u0 in starts:
        res = lm_minimize(fun, u0, max_iter=max_iter)
        attempts.append((res.cost, res.converged))
        key = (not res.converged, res.cost)
        if best is None or key < (not best.converged, best.cost):
            best = res
    theta = from_transformed(best.x).canonical()
    n_obs = problem.observed.size
    stderr, singular = _stderr(theta, best.jac, best.cost, n_obs)
    flags = []
    if not np.any(problem.observed != 0) or theta.C < 1e-10:
        flags.append("degenerate")
    if theta.C_p > 0.5 * problem.window:
        flags.append("period_unidentifiable")
    if singular:
        flags.append("singular_jacobian")
    return FitResult(theta, best.cost, best.iterations, best.converged, stderr,
                     len(starts), flags, attempts, best)


def relative_error(observed, predicted) -> float:
    """``||s - s_hat|| / ||s||``."""
    s = np.asarray(observed, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if s.shape != p.shape:
        raise DomainError("observed and predicted lengths differ")
    norm = np.linalg.norm(s)
    if norm == 0:
        raise DomainError("relative error undefined for an all-zero observed series")
    return float(np.linalg.norm(s - p) / norm)


class SpreadingCurveRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_theta`.

    ``X`` holds real times in hours (one column) of uniformly spaced bin
    centres starting at half a bin, ``y`` the counts per bin.

    Parameters
    ----------
    time_scale : float, default=500
        Real hours per model time unit.
    restarts : int, default=32
    random_state : int, default=0
    initial_theta : TimeVaryingParams or None
    """

    def __init__(self, time_scale: float = DEFAULT_TIME_SCALE, restarts: int = 32,
                 random_state: int = 0, initial_theta=None):
        self.time_scale = time_scale
        self.restarts = restarts
        self.random_state = random_state
        self.initial_theta = initial_theta

    @staticmethod
    def _hours(X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X.ravel() if X.ndim < 2 else X[:, 0]

    def fit(self, X, y):
        hours = self._hours(X)
        y = np.asarray(y, dtype=float).ravel()
        if hours.size != y.size:
            raise DomainError("X and y lengths differ")
        step = np.diff(hours).mean() if hours.size > 1 else 2 * hours[0]
        if hours[0] <= 0 or (hours.size > 1 and np.ptp(np.diff(hours)) > 1e-9 * step):
            raise DomainError("X must be uniform bin centres starting after 0")
        self.bin_hours_ = float(step)
        problem = FitProblem(y, self.time_scale, self.bin_hours_, self.initial_theta)
        self.result_ = fit_theta(problem, self.restarts, self.random_state)
        self.theta_ = self.result_.theta
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        hours = self._hours(X)
        n = int(np.ceil(hours.max() / self.bin_hours_ + 0.5)) + 1
        grid_h = (np.arange(n) + 0.5) * self.bin_hours_
        values = rate_eq21(self.theta_, grid_h / self.time_scale).values
        return np.interp(hours, grid_h, values)
