"""Composite experiments: truncate-fit-predict, synthetic corpora, curve crossings."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .ar import DegenerateDesignWarning, ar_fit, ar_predict
from .exceptions import DomainError
from .fitting import DEFAULT_BIN_HOURS, DEFAULT_TIME_SCALE, FitProblem, fit_theta, model_rate, relative_error
from .timevarying import TABLE1_S1, TABLE1_S2, TimeVaryingParams, model_grid, rate_eq21

__all__ = [
    "predict_experiment", "synthetic_series", "synthetic_corpus", "curves_cross",
    "CROSSING_RESOLUTION", "AR_ORDERS", "PERIODIC_DECAY",
]

AR_ORDERS = (6, 39)
# The published video-series row with a 25-hour popularity scale: a rise over
# the first day, then daily peaks under a decaying envelope within one week.
PERIODIC_DECAY = TABLE1_S2.replace(eta=0.05, C=1e-5)
CROSSING_RESOLUTION = 0.01


def _ar_arm(train, test, order):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDesignWarning)
            coeffs, degenerate = ar_fit(train, order, return_flag=True)
        pred = ar_predict(coeffs, train, test.size)
        return {"relative_error": relative_error(test, pred), "degenerate": degenerate,
                "failed": False, "prediction": pred.tolist()}
    except DomainError as exc:
        return {"failed": True, "error": str(exc)}


def predict_experiment(series, train_fraction: float = 1.0 / 3.0,
                       time_scale: float = DEFAULT_TIME_SCALE, restarts: int = 32,
                       seed: int = 0, bin_hours: float = DEFAULT_BIN_HOURS,
                       initial_theta: TimeVaryingParams | None = None) -> dict:
    """Fit on the leading part of a series and forecast the rest three ways.

    Arms: the closed-form rate fitted by :func:`fit_theta`, AR(6) and AR(39),
    all trained on the same leading ``train_fraction`` of the raw series and
    scored by :func:`relative_error` on the remainder.  An arm that cannot be
    trained is reported with ``failed: True``.
    """
    s = np.asarray(series, dtype=float).ravel()
    if not 0.0 < train_fraction < 1.0:
        raise DomainError("train_fraction must lie in (0, 1)")
    n_train = int(math.floor(train_fraction * s.size))
    horizon = s.size - n_train
    if horizon < 1 or n_train < 1:
        raise DomainError("train/test split leaves an empty window")
    train, test = s[:n_train], s[n_train:]
    report = {"n": int(s.size), "n_train": n_train, "horizon": horizon,
              "train_fraction": train_fraction, "seed": seed}
    try:
        fit = fit_theta(FitProblem(train, time_scale, bin_hours, initial_theta), restarts, seed)
        pred = model_rate(fit.theta, s.size, bin_hours, time_scale)[n_train:]
        report["model"] = {"relative_error": relative_error(test, pred), "failed": False,
                           "converged": fit.converged, "theta": fit.theta.to_dict(),
                           "flags": fit.flags, "prediction": pred.tolist()}
    except DomainError as exc:
        report["model"] = {"failed": True, "error": str(exc)}
    for order in AR_ORDERS:
        report[f"ar{order}"] = _ar_arm(train, test, order)
    return report


def synthetic_series(theta: TimeVaryingParams = PERIODIC_DECAY, n: int = 336, noise: float = 0.0,
                     seed: int = 0, bin_hours: float = DEFAULT_BIN_HOURS,
                     time_scale: float = DEFAULT_TIME_SCALE) -> np.ndarray:
    """Rate-model series with optional multiplicative Gaussian noise ``1 + noise*N(0,1)``."""
    y = model_rate(theta, n, bin_hours, time_scale)
    if noise:
        rng = np.random.default_rng(seed)
        y = y * (1.0 + noise * rng.standard_normal(n))
    return y


def _model_shape(theta, L, rng):
    jitter = np.exp(rng.normal(0.0, 0.02, size=2))
    th = theta.replace(p=theta.p * jitter[0], eta=theta.eta * jitter[1],
                       vartheta=theta.vartheta + rng.normal(0.0, 0.05))
    x = rate_eq21(th, model_grid(L, DEFAULT_BIN_HOURS / DEFAULT_TIME_SCALE)).values
    shift = int(rng.integers(-8, 9))
    out = np.zeros_like(x)
    if shift >= 0:
        out[shift:] = x[:L - shift]
    else:
        out[:shift] = x[-shift:]
    return out


# one spike then a faint periodic tail: popularity fades within a day
SPIKE_DECAY = PERIODIC_DECAY.replace(eta=0.02)


def _spike_decay(L, rng):
    return _model_shape(SPIKE_DECAY, L, rng)


def _periodic_decay(L, rng):
    return _model_shape(PERIODIC_DECAY, L, rng)


def _truncated_rise(L, rng):
    # the published video row grows throughout a one-week window
    return _model_shape(TABLE1_S1, L, rng)


MORPHOLOGIES = (_spike_decay, _periodic_decay, _truncated_rise)


def synthetic_corpus(n_per_class: int = 20, length: int = 336, noise: float = 0.02,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Labelled corpus of three activity morphologies.

    All three are closed-form rate curves with 2% jitter on ``p`` and
    ``eta``, a small phase jitter and a random shift of up to 8 bins.
    Label 0: one sharp spike with a faint periodic tail (popularity scale
    ``eta = 0.02``); label 1: daily peaks under a decaying envelope
    (``eta = 0.05``); label 2: a rise truncated by the observation window (the
    published video row).  Each series gets a random scale and
    multiplicative noise ``noise``.

    Returns
    -------
    X : ndarray of shape (3 * n_per_class, length)
    labels : ndarray of int
    """
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for lab, gen in enumerate(MORPHOLOGIES):
        for _ in range(n_per_class):
            x = gen(length, rng)
            x = x / x.max() * rng.uniform(50, 500)
            x = x * (1.0 + noise * rng.standard_normal(length))
            rows.append(np.clip(x, 0.0, None))
            labels.append(lab)
    return np.array(rows), np.array(labels)


def curves_cross(p_a, p_b, resolution: float = CROSSING_RESOLUTION) -> bool:
    """Whether curve ``a - b`` changes sign between resolved grid points.

    Only points with ``|a - b| > resolution`` take part, so differences below
    the plotting resolution do not count as crossings.
    """
    diff = np.asarray(p_a, dtype=float) - np.asarray(p_b, dtype=float)
    signs = np.sign(diff[np.abs(diff) > resolution])
    return bool(np.any(signs[1:] != signs[:-1]))

