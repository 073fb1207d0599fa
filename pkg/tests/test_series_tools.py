"""AR baseline, smoothing and the composite experiments."""
import warnings

import numpy as np
import pytest

from infospread.ar import ARForecaster, DegenerateDesignWarning, ar_fit, ar_predict
from infospread.exceptions import DomainError
from infospread.experiments import (PERIODIC_DECAY, curves_cross, predict_experiment,
                                    synthetic_corpus, synthetic_series)
from infospread.smoothing import GaussianSmoother, gaussian_smooth


def test_ar_recovers_known_coefficients():
    rng = np.random.default_rng(0)
    x = np.zeros(5000)
    for t in range(2, x.size):
        x[t] = 0.6 * x[t - 1] - 0.3 * x[t - 2] + rng.standard_normal()
    np.testing.assert_allclose(ar_fit(x, 2), [0.6, -0.3], atol=0.03)


def test_ar_exact_on_noiseless_recursion():
    x = [1.0, 2.0]
    for _ in range(30):
        x.append(0.5 * x[-1] + 0.25 * x[-2])
    np.testing.assert_allclose(ar_fit(x, 2), [0.5, 0.25], rtol=1e-10)
    pred = ar_predict([0.5, 0.25], x, 3)
    expected = [0.5 * x[-1] + 0.25 * x[-2]]
    expected.append(0.5 * expected[0] + 0.25 * x[-1])
    np.testing.assert_allclose(pred[:2], expected)


def test_ar_degenerate_design_warns():
    with pytest.warns(DegenerateDesignWarning):
        coeffs, flag = ar_fit(np.ones(30), 3, return_flag=True)
    assert flag
    assert np.all(np.isfinite(coeffs))


def test_ar_too_short_rejected():
    with pytest.raises(DomainError):
        ar_fit(np.arange(12.0), 6)


def test_ar_estimator():
    x = np.sin(np.arange(100) / 5.0) + 0.1 * np.random.default_rng(0).standard_normal(100)
    est = ARForecaster(order=4).fit(x)
    assert est.predict(5).shape == (5,)
    assert not est.degenerate_


def test_smoothing_preserves_mass_and_constants():
    x = np.zeros(101)
    x[50] = 1.0
    s = gaussian_smooth(x, 2.0)
    assert s.sum() == pytest.approx(1.0, abs=1e-12)
    assert s.argmax() == 50
    np.testing.assert_allclose(gaussian_smooth(np.full(20, 3.0)), 3.0)
    with pytest.raises(DomainError):
        gaussian_smooth(x, 0.0)


def test_smoother_transformer_rowwise():
    X = np.random.default_rng(0).random((3, 30))
    out = GaussianSmoother(1.5).fit_transform(X)
    np.testing.assert_allclose(out[1], gaussian_smooth(X[1], 1.5))


def test_curves_cross_ignores_sub_resolution_wiggles():
    a = np.array([0.002, 0.003, 0.20, 0.50])
    b = np.array([0.003, 0.002, 0.10, 0.40])
    assert not curves_cross(a, b)
    assert curves_cross([0.1, 0.5], [0.2, 0.3])


def test_synthetic_corpus_shape_and_labels():
    X, y = synthetic_corpus(n_per_class=3, length=100, seed=1)
    assert X.shape == (9, 100)
    np.testing.assert_array_equal(np.bincount(y), [3, 3, 3])
    assert np.all(X >= 0)


def test_prediction_experiment_report():
    y = synthetic_series(PERIODIC_DECAY, n=120)
    rep = predict_experiment(y, restarts=1, initial_theta=PERIODIC_DECAY)
    assert rep["n_train"] == 40 and rep["horizon"] == 80
    assert rep["model"]["relative_error"] < 1e-6
    assert rep["ar39"]["failed"]  # 40 samples cannot train AR(39)
    assert not rep["ar6"]["failed"]


def test_ar_first_order_recursion_exact():
    x = 0.9 ** np.arange(50)
    assert ar_fit(x, 1)[0] == pytest.approx(0.9, abs=1e-8)


def test_ar_zero_series_gives_zero_coefficients():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDesignWarning)
        np.testing.assert_array_equal(ar_fit(np.zeros(40), 3), 0.0)


def test_ar_forecast_edge_cases():
    np.testing.assert_array_equal(ar_predict([0.0, 0.0], [5.0, 6.0], 4), 0.0)
    np.testing.assert_allclose(ar_predict([1.1], [1.0], 3), [1.1, 1.21, 1.331])
