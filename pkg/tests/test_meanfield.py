"""Degree-based mean-field solver."""
import math

import numpy as np
import pytest

from infospread.ensemble import CorrelationKernel, DegreeDistribution, moments
from infospread.exceptions import DomainError, InstabilityError, NoOutbreakError
from infospread.meanfield import (DegreeStateField, ModelParams, detect_threshold,
                                  efficiency_scale_free, final_size_uncorrelated,
                                  predict_prevalence_scaling, predict_tau, seed_rows,
                                  solve_correlated, solve_naive, sweep_alpha, sweep_theta)

REGULAR = DegreeDistribution.point_mass(4)


def _closed_form_no_activation(k, a0, lam, beta):
    # alpha = 0: a(t) = a0 exp(-beta t), ignorants decay at lam k a(t)
    return 1.0 - (1.0 - a0) * math.exp(-lam * k * a0 / beta)


@pytest.mark.parametrize("scheme, dt, tol", [("transition", 0.001, 2e-6), ("euler", 0.001, 2e-6),
                                             ("transition", 0.01, 5e-6)])
def test_no_activation_matches_closed_form(scheme, dt, tol):
    rep = solve_correlated(CorrelationKernel(REGULAR, 0.0), ModelParams(0.0, 1.0, 0.5),
                           DegreeStateField.seeded(REGULAR, 100), dt=dt, tol=1e-12,
                           scheme=scheme, record_every=0)
    assert abs(rep.prevalence - _closed_form_no_activation(4, 0.01, 1.0, 0.5)) < tol


def test_no_contact_leaves_only_the_seed():
    d = DegreeDistribution.power_law(2.5, 30)
    rep = solve_correlated(CorrelationKernel(d, 0.3), ModelParams(0.9, 0.0, 0.5),
                           DegreeStateField.seeded(d, 1000), tol=1e-12, record_every=0)
    assert abs(rep.prevalence - 1e-3) < 1e-12


def test_supercritical_final_size_matches_vanishing_seed_limit():
    d = DegreeDistribution.power_law(2.5, 50)
    p = ModelParams(0.6, 1.0, 0.3)
    rep = solve_correlated(CorrelationKernel(d, 0.0), p, DegreeStateField.seeded(d, 10 ** 7),
                           dt=0.01, tol=1e-12, record_every=0)
    assert abs(rep.prevalence - final_size_uncorrelated(d, p)) < 1e-3


def test_final_size_zero_below_threshold():
    d = DegreeDistribution.power_law(5.0, 11)
    rho_c = 1.0 / moments(d)[2]
    assert final_size_uncorrelated(d, ModelParams(0.9 * rho_c * 0.3, 1.0, 0.3)) == 0.0


def test_naive_and_split_drive_agree():
    d = DegreeDistribution.power_law(2.5, 22)
    kern = CorrelationKernel(d, 0.8)
    p = ModelParams(0.4, 1.0, 0.3)
    a = solve_naive(kern, p, record_every=0)
    b = solve_correlated(kern, p, record_every=0)
    assert abs(a.prevalence - b.prevalence) < 1e-9
    assert a.iterations == b.iterations


def test_trajectory_conserves_mass():
    d = DegreeDistribution.power_law(2.5, 22)
    rep = solve_correlated(CorrelationKernel(d, 0.4), ModelParams(0.5, 1.0, 0.3),
                           record_every=10)
    tr = rep.trajectory
    total = tr["i"] + tr["a"] + tr["r"] + tr["q"]
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    assert np.all(np.diff(tr["i"]) <= 1e-15)


def test_state_field_validation():
    with pytest.raises(DomainError):
        DegreeStateField([0.5], [0.6], [0.0], [0.0])
    f = DegreeStateField.seed_in_class(REGULAR, 4, 10)
    assert f.a[0] == pytest.approx(0.1)


def test_euler_instability_is_reported():
    d = DegreeDistribution.power_law(2.5, 473)
    with pytest.raises(InstabilityError):
        solve_correlated(CorrelationKernel(d, 0.8), ModelParams(1.0, 1.0, 0.3),
                         DegreeStateField.seeded(d, 100), dt=0.1, scheme="euler", record_every=0)


def test_bad_step_and_parameters_rejected():
    with pytest.raises(DomainError):
        solve_correlated(CorrelationKernel(REGULAR, 0), ModelParams(0.5, 1, 0.3), dt=0.5)
    with pytest.raises(DomainError):
        ModelParams(1.5, 1.0, 0.3)


def test_seed_rows_weights():
    d = DegreeDistribution.power_law(2.5, 30)
    a0, w = seed_rows(d, 100, 10_000, seed=1)
    assert abs(w.sum() - 1) < 1e-15
    assert np.all((a0 > 0).sum(axis=1) == 1)
    a0, w = seed_rows(d, None, 10_000, seed=1)
    np.testing.assert_allclose(a0, 1e-4)


def test_sweeps_are_deterministic_and_grid_splittable():
    kern = CorrelationKernel(DegreeDistribution.power_law(5.0, 11), 0.4)
    grid = np.linspace(0.1, 0.6, 6)
    full = sweep_alpha(kern, grid, runs=10, n=1000, seed=3)
    parts = [sweep_alpha(kern, g, runs=10, n=1000, seed=3) for g in np.array_split(grid, 2)]
    np.testing.assert_allclose(full.prevalence, np.concatenate([p.prevalence for p in parts]),
                               rtol=1e-13)
    assert np.all(np.diff(full.prevalence) > 0)


def test_sweep_theta_matches_sweep_alpha():
    d = DegreeDistribution.power_law(5.0, 11)
    a = sweep_theta(d, [0.0, 0.8], ModelParams(0.4, 1.0, 0.3), runs=5, n=1000, seed=0)
    b = sweep_alpha(CorrelationKernel(d, 0.8), [0.4], runs=5, n=1000, seed=0)
    assert a.prevalence[1] == pytest.approx(b.prevalence[0], abs=1e-14)


def test_detect_threshold():
    assert detect_threshold([0.1, 0.2, 0.3], [0.01, 0.06, 0.5]) == 0.2
    assert math.isnan(detect_threshold([0.1], [0.0]))


def test_predict_tau_and_no_outbreak():
    p = ModelParams(0.6, 1.0, 0.3)
    assert predict_tau(p, 1.0) == pytest.approx((1 / 0.3) / (2.0 - 1.0))
    with pytest.raises(NoOutbreakError):
        predict_tau(ModelParams(0.1, 1.0, 0.3), 1.0)


def test_efficiency_scale_free_formula():
    p = ModelParams(0.5, 1.0, 0.3)
    assert efficiency_scale_free(p, 5.0) == pytest.approx((0.5 * 3 - 0.3 * 2) / 2)
    assert efficiency_scale_free(p, 2.5) == math.inf


def test_scaling_forms():
    rep = predict_prevalence_scaling(2.5, [0.1, 0.2])
    assert rep.slope == 2.0
    rep = predict_prevalence_scaling(3.0, [0.1, 0.2])
    np.testing.assert_allclose(rep.abscissa(), [10.0, 5.0])
    with pytest.raises(NoOutbreakError):
        predict_prevalence_scaling(5.0, [0.5])
