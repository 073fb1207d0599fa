"""Levenberg–Marquardt nonlinear least squares.

Marquardt's scaled damping: each trial step solves

    (J^T J + mu * diag(J^T J)) delta = -J^T r,

``mu`` is divided by 10 after an accepted step and multiplied by 10 after a
rejected one.  The Jacobian is built by forward differences with step
``1e-6 * (1 + |x_j|)`` unless an analytic one is supplied.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LMResult", "lm_minimize", "forward_jacobian"]

MU_MAX = 1e16


@dataclass
class LMResult:
    """Outcome of :func:`lm_minimize`.

    Attributes
    ----------
    x : ndarray
        Final iterate.
    cost : float
        Residual sum of squares at ``x``.
    iterations : int
        Outer iterations performed (Jacobian evaluations).
    converged : bool
        True when the cost or gradient test was met.
    message : str
    jac : ndarray
        Jacobian at ``x``.
    history : list of float
        Cost after every accepted step, starting with the initial cost.
    """

    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    message: str
    jac: np.ndarray | None = None
    history: list = field(default_factory=list)
    n_eval: int = 0


def _sumsq(r: np.ndarray) -> float:
    # penalty residuals may square to inf; that is the intended rejection
    with np.errstate(over="ignore"):
        return float(r @ r)


def forward_jacobian(fun, x: np.ndarray, r0: np.ndarray | None = None) -> np.ndarray:
    """Forward-difference Jacobian with step ``1e-6 * (1 + |x_j|)``."""
    x = np.asarray(x, dtype=float)
    if r0 is None:
        r0 = np.asarray(fun(x), dtype=float)
    jac = np.empty((r0.size, x.size))
    for j in range(x.size):
        step = 1e-6 * (1.0 + abs(x[j]))
        xp = x.copy()
        xp[j] += step
        jac[:, j] = (np.asarray(fun(xp), dtype=float) - r0) / step
    return jac


def lm_minimize(fun, x0, jac=None, max_iter: int = 200, ftol: float = 1e-10,
                gtol: float = 1e-10, mu0: float = 1e-3) -> LMResult:
    """Minimize ``sum(fun(x)**2)``.

    Parameters
    ----------
    fun : callable
        Residual vector function.
    x0 : array_like
        Starting point; ``fun(x0)`` must be finite.
    jac : callable, optional
        Analytic Jacobian; forward differences otherwise.
    max_iter : int
        Cap on outer iterations.
    ftol : float
        Stop when an accepted step lowers the cost by less than ``ftol``
        relative.
    gtol : float
        Stop when ``||J^T r||_inf < gtol``.
    mu0 : float
        Initial damping.

    Returns
    -------
    LMResult
        Non-convergence (iteration cap, damping blow-up, non-finite
        residuals) is reported through ``converged=False``, never raised.
    """
    x = np.array(x0, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    n_eval = 1
    if not np.all(np.isfinite(r)):
        return LMResult(x, float("inf"), 0, False, "residual not finite at x0", n_eval=n_eval)
    cost = _sumsq(r)
    history = [cost]
    if cost == 0.0:
        return LMResult(x, 0.0, 0, True, "zero residual", None, history, n_eval)
    mu = mu0
    J = None
    for it in range(1, max_iter + 1):
        if jac is None:
            J = forward_jacobian(fun, x, r)
            n_eval += x.size
        else:
            J = np.asarray(jac(x), dtype=float)
        g = J.T @ r
        if np.abs(g).max() < gtol:
            return LMResult(x, cost, it, True, "gradient below tolerance", J, history, n_eval)
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = np.finfo(float).tiny
        while True:
            try:
                delta = np.linalg.solve(A + mu * np.diag(d), -g)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                x_new = x + delta
                r_new = np.asarray(fun(x_new), dtype=float)
                n_eval += 1
                cost_new = _sumsq(r_new) if np.all(np.isfinite(r_new)) else np.inf
                if cost_new <= cost:
                    break
            mu *= 10.0
            if mu > MU_MAX:
                return LMResult(x, cost, it, False, "damping exceeded its cap without progress",
                                J, history, n_eval)
        rel = (cost - cost_new) / cost if cost > 0 else 0.0
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        mu = max(mu / 10.0, 1e-20)
        if cost == 0.0 or rel < ftol:
            if jac is None:
                J = forward_jacobian(fun, x, r)
                n_eval += x.size
            else:
                J = np.asarray(jac(x), dtype=float)
            return LMResult(x, cost, it, True, "relative cost change below tolerance",
                            J, history, n_eval)
    return LMResult(x, cost, max_iter, False, "iteration limit reached", J, history, n_eval)
