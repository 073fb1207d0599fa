"""Rate-model fitting."""
import json

import numpy as np
import pytest

from infospread.exceptions import DomainError
from infospread.fitting import (FitProblem, SpreadingCurveRegressor, fit_theta,
                                from_transformed, model_rate, observation_times,
                                relative_error, to_transformed)
from infospread.timevarying import TABLE1_S1, TABLE1_S2


def test_transform_roundtrip():
    u = to_transformed(TABLE1_S2)
    np.testing.assert_allclose(from_transformed(u).to_array(), TABLE1_S2.to_array(), rtol=1e-15)
    assert u[0] == pytest.approx(np.log(TABLE1_S2.p))
    assert u[2] == TABLE1_S2.z


def test_observation_times_are_bin_centres():
    np.testing.assert_allclose(observation_times(3, 0.5, 500), [0.0005, 0.0015, 0.0025])


def test_relative_error():
    assert relative_error([3, 4], [3, 4]) == 0.0
    assert relative_error([3, 4], [0, 0]) == 1.0
    with pytest.raises(DomainError):
        relative_error([0, 0], [1, 1])
    with pytest.raises(DomainError):
        relative_error([1, 2], [1])


def test_short_or_non_finite_series_rejected():
    with pytest.raises(DomainError):
        FitProblem(np.ones(11))
    with pytest.raises(DomainError):
        FitProblem(np.r_[np.ones(20), np.nan])


@pytest.mark.parametrize("row", [TABLE1_S1, TABLE1_S2])
def test_noiseless_recovery_from_nearby_start(row):
    y = model_rate(row, 336)
    start = row.replace(p=row.p * 1.2, eta=row.eta * 0.8, C=row.C * 1.3)
    res = fit_theta(FitProblem(y, initial_theta=start), restarts=1)
    assert res.converged
    np.testing.assert_allclose(res.theta.to_array(), row.canonical().to_array(), rtol=1e-4)
    assert res.theta.z >= 0


def test_all_zero_series_is_flagged_degenerate():
    res = fit_theta(FitProblem(np.zeros(48)), restarts=2, max_iter=20)
    assert "degenerate" in res.flags


def test_result_serializes():
    y = model_rate(TABLE1_S1, 60)
    res = fit_theta(FitProblem(y, initial_theta=TABLE1_S1), restarts=1, max_iter=5)
    d = json.loads(res.to_json())
    assert set(d["theta"]) == {"p", "eta", "z", "vartheta", "C_p", "C"}
    assert set(d["stderr"]) == set(d["theta"])


def test_regressor_fit_predict():
    hours = (np.arange(200) + 0.5) * 0.5
    y = model_rate(TABLE1_S2, 200)
    reg = SpreadingCurveRegressor(restarts=1, initial_theta=TABLE1_S2).fit(hours[:, None], y)
    np.testing.assert_allclose(reg.predict(hours[:, None]), y, rtol=1e-6)
    assert reg.bin_hours_ == pytest.approx(0.5)
    with pytest.raises(DomainError):
        SpreadingCurveRegressor().fit(np.arange(20.0)[:, None], np.ones(20))
