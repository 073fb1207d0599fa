"""Gaussian smoothing of activity series."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter1d
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DomainError

__all__ = ["gaussian_smooth", "GaussianSmoother"]


def gaussian_smooth(series, sigma: float = 2.0) -> np.ndarray:
    """Convolve with a normalized Gaussian kernel.

    The kernel is truncated at ``4*sigma`` samples and the boundary is
    reflected, so output and input lengths agree.

    Parameters
    ----------
    series : array_like, 1-d
    sigma : float
        Kernel width in samples (default 2).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("series must be a non-empty 1-d array")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return gaussian_filter1d(x, sigma, mode="reflect", truncate=4.0)


class GaussianSmoother(TransformerMixin, BaseEstimator):
    """Row-wise Gaussian smoothing of a batch of series.

    Stateless: ``fit`` only records the expected series length.

    Parameters
    ----------
    sigma : float, default=2.0
        Kernel width in samples.
    """

    def __init__(self, sigma: float = 2.0):
        self.sigma = sigma

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.vstack([gaussian_smooth(row, self.sigma) for row in X])
