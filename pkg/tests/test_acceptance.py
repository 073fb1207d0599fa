"""Acceptance criteria.

Each test prints exactly one line ``PASS|FAIL C<n> <name>: <measurements>``
(also collected into the pytest terminal summary).  Criteria are asserted at
their stated tolerances; a failing line is a real failure.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""
from __future__ import annotations

import functools
import math
import sys
import time

import numpy as np
from sklearn.metrics import rand_score

from infospread.ensemble import (CorrelationKernel, DegreeDistribution, largest_eigenvalue,
                                 moments)
from infospread.ensemble import ConnectivityMatrix
from infospread.experiments import (PERIODIC_DECAY, curves_cross, predict_experiment,
                                    synthetic_corpus, synthetic_series)
from infospread.fitting import FitProblem, fit_theta, model_rate
from infospread.graphs import configuration_model, sample_powerlaw_sequence
from infospread.ksc import distance_matrix, hartigan_table, select_k_hartigan, silhouette
from infospread.meanfield import (ModelParams, detect_threshold, final_size_uncorrelated,
                                  sweep_alpha, sweep_theta)
from infospread.montecarlo import ensemble_prevalence
from infospread.timevarying import (TABLE1_S1, TABLE1_S2, alpha_gamma, lambda_vonmises,
                                    matrix_exponential_check, rate_eq21, solve_extended)
from infospread.meanfield import DegreeStateField

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = []

ALPHAS = np.round(np.arange(1, 101) * 0.01, 10)
LAM, BETA = 1.0, 0.3
RUNS, N = 100, 10_000
GAMMA5 = DegreeDistribution.power_law(5.0, 11)
GAMMA25_SMALL = DegreeDistribution.power_law(2.5, 22)
GAMMA25_LARGE = DegreeDistribution.power_law(2.5, 473)


def verdict(tag: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def r_squared(x, y) -> tuple[float, float]:
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return float(1.0 - resid @ resid / np.sum((y - y.mean()) ** 2)), float(slope)


@functools.lru_cache(maxsize=None)
def alpha_sweep(dist_key: str, theta: float):
    dist = {"g5": GAMMA5, "g25_22": GAMMA25_SMALL, "g25_473": GAMMA25_LARGE}[dist_key]
    t0 = time.perf_counter()
    res = sweep_alpha(CorrelationKernel(dist, theta), ALPHAS, LAM, BETA, runs=RUNS, n=N, seed=0)
    return res, time.perf_counter() - t0


def test_c01_threshold_position():
    res, secs = alpha_sweep("g5", 0.0)
    target = BETA / moments(GAMMA5)[2]
    a_c = detect_threshold(res.grid, res.prevalence)
    verdict("C1 threshold position",
            abs(a_c - target) <= 0.03 and secs < 60,
            f"alpha_c={a_c:.2f} target={target:.3f} (discrete <k>/<k^2> * beta; continuum 0.2) "
            f"runtime={secs:.1f}s")


def test_c02_threshold_absence():
    t0 = time.perf_counter()
    res = sweep_alpha(CorrelationKernel(GAMMA25_LARGE, 0.0), [0.02], LAM, BETA, runs=RUNS,
                      n=N, seed=0)
    secs = time.perf_counter() - t0
    ratio = res.prevalence[0] / res.seed_mass
    verdict("C2 threshold absence", ratio > 10 and secs < 120,
            f"P(alpha=0.02)={res.prevalence[0]:.4g} = {ratio:.1f} x seed mass runtime={secs:.1f}s")


def test_c03_correlation_inhibits_threshold():
    a_c = {th: detect_threshold(ALPHAS, alpha_sweep("g5", th)[0].prevalence)
           for th in (0.0, 0.4, 0.8)}
    seq = [a_c[0.0], a_c[0.4], a_c[0.8]]
    ok = seq[0] <= seq[1] <= seq[2] and seq[0] < seq[2]
    verdict("C3 correlation inhibits threshold", ok,
            "alpha_c(theta=0,0.4,0.8)=" + ",".join(f"{v:.2f}" for v in seq))


def test_c04_curve_crossing():
    details, ok = [], True
    for key, want in (("g5", True), ("g25_22", True), ("g25_473", False)):
        (a, ta), (b, tb) = alpha_sweep(key, 0.0), alpha_sweep(key, 0.8)
        crossed = curves_cross(a.prevalence, b.prevalence)
        ok &= crossed == want and ta < 300 and tb < 300
        details.append(f"{key} cross={crossed} (want {want}) {max(ta, tb):.0f}s")
    verdict("C4 curve crossing", ok, "; ".join(details))


def test_c05_efficiency_linearity():
    thetas = np.round(np.arange(0, 81) * 0.01, 10)
    params = ModelParams(0.7, LAM, BETA)
    eff = {}
    for name, dist in (("g2.5", GAMMA25_LARGE), ("g5", GAMMA5)):
        eff[name] = sweep_theta(dist, thetas, params, runs=RUNS, n=N, seed=0).efficiency
    fits = {name: r_squared(thetas, e) for name, e in eff.items()}
    pointwise = bool(np.all(eff["g2.5"] > eff["g5"]))
    ok = all(r2 >= 0.9 and s < 0 for r2, s in fits.values()) and pointwise
    verdict("C5 efficiency linearity", ok,
            "; ".join(f"{n} R2={r2:.3f} slope={s:.3g}" for n, (r2, s) in fits.items())
            + f"; E(2.5)>E(5) pointwise={pointwise}")


def _random_kernel(rng):
    side = int(rng.integers(2, 201))
    kind = rng.integers(3)
    degrees = np.sort(rng.choice(np.arange(1, 1000), size=side, replace=False))
    if kind == 0:
        w = rng.random(side) + 1e-3
        dist = DegreeDistribution.from_weights(degrees, w)
        return CorrelationKernel(dist, float(rng.uniform(0, 0.99))).connectivity()
    if kind == 1:
        # detailed balance from a random symmetric edge-end matrix
        e = rng.random((side, side))
        e = e + e.T
        cond = e / e.sum(axis=1, keepdims=True)
        w = e.sum(axis=1) / degrees
        return ConnectivityMatrix(degrees[:, None] * cond, degrees, w / w.sum())
    cond = rng.random((side, side))
    cond /= cond.sum(axis=1, keepdims=True)
    return ConnectivityMatrix(degrees[:, None] * cond, degrees, None)


def test_c06_spectral_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        c = _random_kernel(rng)
        dense = float(np.max(np.abs(np.linalg.eigvals(c.entries))))
        worst = max(worst, abs(largest_eigenvalue(c) - dense) / dense)
    unc = 0.0
    for gamma, k_cut in ((2.5, 473), (5.0, 11), (3.0, 200), (2.2, 1000)):
        d = DegreeDistribution.power_law(gamma, k_cut)
        lam = largest_eigenvalue(CorrelationKernel(d, 0.0).connectivity())
        unc = max(unc, abs(lam - moments(d)[2]) / moments(d)[2])
    verdict("C6 spectral oracle", worst < 1e-8 and unc < 1e-8,
            f"max rel err random={worst:.2e} uncorrelated={unc:.2e}")


def test_c07_monte_carlo_vs_mean_field():
    t0 = time.perf_counter()
    params = ModelParams(0.7, LAM, BETA)
    dist = DegreeDistribution.power_law(2.5, 473)
    seq = sample_powerlaw_sequence(dist, 10_000, seed=0)
    g = configuration_model(seq, seed=0)
    mc, se = ensemble_prevalence(g, params, runs=50, seed=0, dt=0.1)
    deg = g.degree_sequence
    ks, counts = np.unique(deg[deg > 0], return_counts=True)
    realized = DegreeDistribution.from_weights(ks, counts)
    ode = sweep_alpha(CorrelationKernel(realized, 0.0), [params.alpha], LAM, BETA, runs=50,
                      n=g.n, seed=0).prevalence[0] * (deg > 0).mean()
    secs = time.perf_counter() - t0
    verdict("C7 MC vs mean field", abs(mc - ode) <= 0.05 and secs < 300,
            f"MC={mc:.4f}+-{se:.4f} ODE={ode:.4f} |diff|={abs(mc - ode):.4f} "
            f"L1 degree gap={g.l1_gap} runtime={secs:.0f}s")


def _closed_vs_solver(dist, a0=1e-5, dt=1e-6):
    theta = TABLE1_S1
    kern = CorrelationKernel(dist, 0.0)
    init = DegreeStateField(1.0 - np.full(dist.size, a0), np.full(dist.size, a0),
                            np.zeros(dist.size), np.zeros(dist.size))
    tr = solve_extended(kern, theta, init, dt, theta.C_p)
    mk, _, het = moments(dist)
    sub = slice(999, None, 1000)  # every 1000th midpoint over the first activity period
    t, rate = tr.rate_t[sub], tr.rate[sub]
    th = theta.replace(C=mk * a0)
    exact = rate_eq21(th, t, spectral_scale=het).values
    literal = rate_eq21(th, t).values
    return (float(np.max(np.abs(exact / rate - 1))), float(np.max(np.abs(literal / rate - 1))),
            het)


def test_c08_closed_form_vs_numeric():
    e1, _, _ = _closed_vs_solver(DegreeDistribution.point_mass(1))
    e5, lit5, het = _closed_vs_solver(GAMMA5)
    th = TABLE1_S1
    alpha_fn = lambda s: alpha_gamma(s, th.p, th.eta)
    lambda_fn = lambda s: lambda_vonmises(s, th.z, th.vartheta, th.C_p)
    resid = 0.0
    for d, theta in ((DegreeDistribution.power_law(2.5, 6), 0.4),
                     (DegreeDistribution.power_law(5.0, 4), 0.0),
                     (DegreeDistribution.point_mass(3), 0.0)):
        resid = max(resid, matrix_exponential_check(CorrelationKernel(d, theta), alpha_fn,
                                                    lambda_fn, np.full(d.size, 1e-5), th.C_p))
    ok = e1 < 0.05 and e5 < 0.05 and resid < 1e-5
    verdict("C8 closed form vs numeric", ok,
            f"max rel gap k=1: {e1:.2e}; gamma=5 (exponent scaled by <k^2>/<k>={het:.3f}): "
            f"{e5:.2e} [unscaled exponent: {lit5:.2e}]; matrix-exp residual={resid:.2e}")


def _within(fit, truth, tol):
    a, b = fit.to_array(), truth.canonical().to_array()
    return bool(np.all(np.abs(a - b) <= tol * np.abs(b)))


def test_c09_fit_recovery():
    summary, ok, slowest = [], True, 0.0
    for name, row in (("s1", TABLE1_S1), ("s2", TABLE1_S2)):
        clean = model_rate(row, 336)
        for noise, tol in ((0.0, 0.01), (0.05, 0.10)):
            hits = 0
            for trial in range(20):
                y = clean if noise == 0 else synthetic_series(row, 336, noise, seed=trial)
                t0 = time.perf_counter()
                res = fit_theta(FitProblem(y), restarts=32, seed=trial)
                slowest = max(slowest, time.perf_counter() - t0)
                hits += _within(res.theta, row, tol)
            ok &= hits >= 18
            summary.append(f"{name} noise={noise:.0%}: {hits}/20")
    ok &= slowest < 180
    verdict("C9 fit recovery", ok, "; ".join(summary) + f"; slowest trial={slowest:.0f}s")


def test_c10_clustering():
    X, labels = synthetic_corpus(n_per_class=20, seed=0)
    H, models = hartigan_table(X, range(1, 7), seed=0, restarts=8)
    D = distance_matrix(X)
    sil = {k: silhouette(models[k], X, D=D) for k in range(2, 7)}
    rand = rand_score(labels, models[3].assignments)
    k_h = select_k_hartigan(H, 200)
    k_s = max(sil, key=sil.get)
    verdict("C10 clustering", rand >= 0.9 and k_h == 3 and k_s == 3,
            f"Rand(k=3)={rand:.3f} Hartigan k={k_h} (H={', '.join(f'{k}:{v:.0f}' for k, v in H.items())}) "
            f"silhouette argmax={k_s} ({', '.join(f'{k}:{v:.2f}' for k, v in sil.items())})")


def test_c11_prediction_ordering():
    clean = predict_experiment(synthetic_series(PERIODIC_DECAY), seed=0)
    wins = 0
    for trial in range(20):
        rep = predict_experiment(synthetic_series(PERIODIC_DECAY, noise=0.10, seed=trial),
                                 seed=trial)
        ar6 = rep["ar6"]
        wins += (not rep["model"]["failed"]) and (ar6["failed"] or
                                                  rep["model"]["relative_error"] < ar6["relative_error"])
    err = clean["model"]["relative_error"]
    verdict("C11 prediction ordering", wins >= 18 and err < 0.3,
            f"model beats AR(6) in {wins}/20 noisy trials; noiseless model error={err:.2e}")


def test_c12_scaling_laws():
    def prevalence(dist, rhos):
        return np.array([final_size_uncorrelated(dist, ModelParams(r * BETA, 1.0, BETA))
                         for r in rhos])

    big25 = DegreeDistribution.power_law(2.5, 100_000)
    rho = np.geomspace(0.02, 0.1, 9)
    s25 = np.polyfit(np.log(rho), np.log(prevalence(big25, rho)), 1)[0]

    rho_c = 1.0 / moments(GAMMA5)[2]
    rho5 = rho_c * np.linspace(1.02, 1.3, 15)
    r2_5, s5 = r_squared(rho5, prevalence(GAMMA5, rho5))

    # above the finite-cutoff threshold (rho ~ 0.11 at k_c = 1e6), inside the exponential regime
    big3 = DegreeDistribution.power_law(3.0, 1_000_000)
    rho3 = np.linspace(0.2, 0.4, 9)
    s3 = np.polyfit(1.0 / rho3, np.log(prevalence(big3, rho3)), 1)[0]

    ok = abs(s25 - 2.0) <= 0.4 and r2_5 >= 0.99 and s5 > 0 and abs(s3 + 1.0) <= 0.3
    verdict("C12 scaling laws", ok,
            f"gamma=2.5 log-log slope={s25:.3f}; gamma=5 near-threshold R2={r2_5:.4f} "
            f"slope={s5:.3f}; gamma=3 lnP vs 1/rho slope={s3:.3f}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
