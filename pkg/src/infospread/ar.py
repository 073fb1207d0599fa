"""Autoregressive baseline forecaster (no intercept)."""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import DomainError

__all__ = ["ar_fit", "ar_predict", "ARForecaster", "DegenerateDesignWarning", "RIDGE"]

RIDGE = 1e-8


class DegenerateDesignWarning(RuntimeWarning):
    """The lagged design matrix was rank deficient; a ridge term was added."""


def _design(x: np.ndarray, order: int):
    # row t: [x_{t-1}, x_{t-2}, ..., x_{t-order}] predicting x_t
    X = np.column_stack([x[order - j - 1: x.size - j - 1] for j in range(order)])
    return X, x[order:]


def ar_fit(series, order: int, return_flag: bool = False):
    """Least-squares AR coefficients.

    Parameters
    ----------
    series : array_like
        Training series, longer than ``2 * order``.
    order : int
    return_flag : bool
        Also return whether the ridge fallback was used.

    Returns
    -------
    coeffs : ndarray of shape (order,)
        ``coeffs[j]`` multiplies ``x_{t-1-j}``.
    """
    x = np.asarray(series, dtype=float).ravel()
    order = int(order)
    if order < 1:
        raise DomainError("order must be >= 1")
    if x.size <= 2 * order:
        raise DomainError(f"need more than {2 * order} samples for order {order}")
    X, y = _design(x, order)
    degenerate = np.linalg.matrix_rank(X) < order
    if degenerate:
        warnings.warn("rank-deficient AR design; using ridge regularization",
                      DegenerateDesignWarning, stacklevel=2)
        coeffs = np.linalg.solve(X.T @ X + RIDGE * np.eye(order), X.T @ y)
    else:
        coeffs = np.linalg.lstsq(X, y, rcond=None)[0]
    return (coeffs, bool(degenerate)) if return_flag else coeffs


def ar_predict(coeffs, history, horizon: int) -> np.ndarray:
    """Iterated multi-step forecast; predictions are fed back as inputs."""
    c = np.asarray(coeffs, dtype=float).ravel()
    h = np.asarray(history, dtype=float).ravel()
    if h.size < c.size:
        raise DomainError("history shorter than the model order")
    buf = list(h[h.size - c.size:][::-1])  # most recent first
    out = np.empty(int(horizon))
    for t in range(int(horizon)):
        nxt = float(np.dot(c, buf))
        out[t] = nxt
        buf = [nxt] + buf[:-1]
    return out


class ARForecaster(RegressorMixin, BaseEstimator):
    """AR(order) forecaster on a single series.

    ``fit(y)`` learns coefficients from the series ``y``; ``predict(horizon)``
    continues it.  ``degenerate_`` records the ridge fallback.
    """

    def __init__(self, order: int = 6):
        self.order = order

    def fit(self, X, y=None):
        series = X if y is None else y
        self.history_ = np.asarray(series, dtype=float).ravel()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDesignWarning)
            self.coef_, self.degenerate_ = ar_fit(self.history_, self.order, return_flag=True)
        return self

    def predict(self, horizon):
        return ar_predict(self.coef_, self.history_, int(np.asarray(horizon).ravel()[0])
                          if np.ndim(horizon) else int(horizon))
