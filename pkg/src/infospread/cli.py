"""Command-line front end.

Every subcommand takes ``--config`` (JSON; unknown keys are rejected),
``--seed``, ``--out`` and ``--jobs``.  Primary output goes to ``--out`` or
stdout; a sidecar JSON with the resolved configuration, seed and library
versions is written next to ``--out`` (``<out>.meta.json``) or to stderr.
A sidecar can be passed back as ``--config`` to reproduce a run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ConvergenceError, DomainError, InstabilityError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


_KERNEL = {"gamma": None, "m": 1, "k_cut": None, "n": None, "theta": 0.0}

SCHEMAS = {
    "ensemble": dict(_KERNEL),
    "sweep": {**_KERNEL, "n": 10_000, "grid": "alpha", "alphas": None, "thetas": None,
              "alpha": 0.7, "lam": 1.0, "beta": 0.3, "runs": 100, "dt": 0.01,
              "tol": 1e-7, "scheme": "transition"},
    "gen-graph": {"model": "config", "n": 10_000, "m_edges": 1, "gamma": 2.5, "k_cut": None,
                  "m": 1, "max_tries": 10},
    "simulate": {"graph": None, "alpha": 0.5, "lam": 0.5, "beta": 0.5, "dt": 1.0,
                 "initial_active": None, "runs": 1},
    "solve": {**_KERNEL, "n": 10_000, "alpha": 0.7, "lam": 1.0, "beta": 0.3, "dt": 0.01,
              "tol": 1e-7, "scheme": "transition", "record_every": 1, "seed_class": None},
    "tv-series": {"theta": None, "n": 336, "bin_hours": 0.5, "time_scale": 500.0,
                  "noise": 0.0, "spectral_scale": 1.0},
    "fit": {"input": None, "time_scale": 500.0, "bin_hours": 0.5, "restarts": 32,
            "initial_theta": None, "max_iter": 200},
    "cluster": {"input": None, "k": None, "ks": [1, 2, 3, 4, 5, 6], "restarts": 8,
                "max_shift": None, "smooth_sigma": None},
    "predict": {"input": None, "train_fraction": 1.0 / 3.0, "time_scale": 500.0,
                "bin_hours": 0.5, "restarts": 32},
    "smooth": {"input": None, "sigma": 2.0},
}
STOCHASTIC = {"sweep", "gen-graph", "simulate", "tv-series", "fit", "cluster", "predict"}


def _versions() -> dict:
    import numba
    import scipy
    import sklearn
    return {"infospread": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "numba": numba.__version__,
            "python": platform.python_version()}


def resolve_config(command: str, raw: dict | None) -> tuple[dict, int | None]:
    """Merge a user config (or a sidecar) over the command defaults."""
    raw = dict(raw or {})
    seed = None
    if "command" in raw and "config" in raw:
        if raw["command"] != command:
            raise ConfigError(f"sidecar is for '{raw['command']}', not '{command}'")
        seed = raw.get("seed")
        raw = dict(raw["config"])
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    cfg = dict(schema)
    cfg.update(raw)
    return cfg, seed


# ---------------------------------------------------------------- I/O helpers
def _open_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text()


def read_series(path) -> np.ndarray:
    """Values from a headed CSV; the last column is taken ("t,count" or "t,rate")."""
    text = _open_text(path)
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise ConfigError("empty series input")
    try:
        float(rows[0][-1])
        body = rows
    except ValueError:
        body = rows[1:]
    try:
        return np.array([float(r[-1]) for r in body])
    except ValueError as exc:
        raise ConfigError(f"non-numeric series value: {exc}") from exc


def read_corpus(path) -> tuple[list[str], np.ndarray]:
    """A directory of series CSVs, or one wide CSV whose columns after ``t`` are series."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.csv"))
        if not files:
            raise ConfigError(f"no CSV files in {p}")
        return [f.stem for f in files], np.vstack([read_series(f) for f in files])
    rows = [r for r in csv.reader(io.StringIO(_open_text(path))) if r]
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return header[1:], body[:, 1:].T


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _grid(spec, name):
    if spec is None:
        if name == "alphas":
            return np.round(np.arange(1, 101) * 0.01, 10)
        return np.round(np.arange(0, 100) * 0.01, 10)
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "step"}
        if extra:
            raise ConfigError(f"unknown grid keys: {sorted(extra)}")
        n = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9)) + 1
        return np.round(spec["start"] + spec["step"] * np.arange(max(n, 0)), 10)
    return np.asarray(spec, dtype=float)


def _kernel(cfg):
    from .ensemble import CorrelationKernel
    if cfg.get("gamma") is None:
        raise ConfigError("gamma is required")
    return CorrelationKernel.from_dict({k: cfg[k] for k in _KERNEL if cfg.get(k) is not None})


def _theta_from(value):
    from .timevarying import TABLE1_S1, TABLE1_S2, TimeVaryingParams
    if value is None:
        raise ConfigError("theta is required")
    if isinstance(value, str):
        named = {"s1": TABLE1_S1, "s2": TABLE1_S2}
        if value not in named:
            raise ConfigError("theta must be an object or one of 's1', 's2'")
        return named[value]
    return TimeVaryingParams.from_dict(value)


# ---------------------------------------------------------------- commands
def cmd_ensemble(cfg, seed, jobs):
    from .ensemble import (annd_table, largest_eigenvalue, moments, threshold_corollary,
                           threshold_uncorrelated)
    kern = _kernel(cfg)
    mk, mk2, het = moments(kern.base)
    lam_m = largest_eigenvalue(kern.connectivity())
    report = {
        "kernel": kern.to_dict(), "mean_k": mk, "mean_k2": mk2, "heterogeneity": het,
        "rho_c_uncorrelated": threshold_uncorrelated(kern.base),
        "lambda_m": lam_m, "rho_c": 1.0 / lam_m,
        "rho_c_corollary": threshold_corollary(kern.base, kern.theta),
        "annd": {int(k): float(v) for k, v in zip(kern.degrees, annd_table(kern))},
    }
    return json.dumps(report, indent=2) + "\n"


def _sweep_chunk(args):
    from .meanfield import ModelParams, sweep_alpha, sweep_theta
    kind, kern, grid, cfg, seed = args
    common = dict(runs=cfg["runs"], n=cfg["n"], seed=seed, dt=cfg["dt"], tol=cfg["tol"],
                  scheme=cfg["scheme"])
    if kind == "alpha":
        res = sweep_alpha(kern, grid, cfg["lam"], cfg["beta"], **common)
    else:
        res = sweep_theta(kern.base, grid, ModelParams(cfg["alpha"], cfg["lam"], cfg["beta"]),
                          **common)
    return res.prevalence, res.efficiency


def cmd_sweep(cfg, seed, jobs):
    from .ensemble import CorrelationKernel
    kind = cfg["grid"]
    if kind not in ("alpha", "theta"):
        raise ConfigError("grid must be 'alpha' or 'theta'")
    grid = _grid(cfg["alphas"] if kind == "alpha" else cfg["thetas"], kind + "s")
    if grid.size == 0:
        raise ConfigError("empty grid")
    base = _kernel({**cfg, "theta": 0.0})
    thetas = cfg["theta"] if isinstance(cfg["theta"], list) else [cfg["theta"]]
    if kind == "theta":
        thetas = [0.0]
    work = []
    for th in thetas:
        kern = CorrelationKernel(base.base, float(th))
        for chunk in np.array_split(grid, max(1, min(jobs, grid.size))):
            work.append((th, (kind, kern, chunk, cfg, seed)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_chunk, [w for _, w in work]))
    else:
        results = [_sweep_chunk(w) for _, w in work]
    rows = []
    for (th, (_, _, chunk, _, _)), (prev, eff) in zip(work, results):
        for g, p, e in zip(chunk, prev, eff):
            if kind == "alpha":
                rows.append([float(th), float(g), float(p), float(e)])
            else:
                rows.append([float(g), float(cfg["alpha"]), float(p), float(e)])
    return _csv_text(["theta", "alpha", "prevalence", "efficiency"], rows)


def cmd_gen_graph(cfg, seed, jobs):
    from .ensemble import DegreeDistribution
    from .graphs import configuration_model, generate_ba, sample_powerlaw_sequence
    if cfg["model"] == "ba":
        g = generate_ba(cfg["n"], cfg["m_edges"], seed)
    elif cfg["model"] == "config":
        dist = DegreeDistribution.from_config(cfg["gamma"], cfg["k_cut"], cfg["m"], cfg["n"])
        deg = sample_powerlaw_sequence(dist, cfg["n"], seed)
        g = configuration_model(deg, seed, cfg["max_tries"])
    else:
        raise ConfigError("model must be 'ba' or 'config'")
    lines = [f"# n={g.n}"] + [f"{u} {v}" for u, v in g.edges]
    extra = {"n_edges": g.n_edges, "l1_gap": g.l1_gap}
    return "\n".join(lines) + "\n", extra


def cmd_simulate(cfg, seed, jobs):
    from .graphs import read_edge_list
    from .meanfield import ModelParams
    from .montecarlo import ensemble_prevalence, simulate
    if cfg["graph"] is None:
        raise ConfigError("graph (edge-list path) is required")
    g = read_edge_list(cfg["graph"])
    params = ModelParams(cfg["alpha"], cfg["lam"], cfg["beta"])
    if cfg["runs"] > 1:
        mean, se = ensemble_prevalence(g, params, cfg["runs"], seed, cfg["dt"], jobs)
        return json.dumps({"prevalence": mean, "stderr": se, "runs": cfg["runs"]}) + "\n"
    v0 = cfg["initial_active"]
    if v0 is None:
        v0 = int(np.random.default_rng(seed).integers(g.n))
    tr = simulate(g, params, cfg["dt"], seed, v0)
    buf = io.StringIO()
    tr.to_csv(buf)
    return buf.getvalue(), {"initial_active": v0, "prevalence": tr.prevalence}


def cmd_solve(cfg, seed, jobs):
    from .meanfield import DegreeStateField, ModelParams, solve_correlated
    kern = _kernel(cfg)
    params = ModelParams(cfg["alpha"], cfg["lam"], cfg["beta"])
    if cfg["seed_class"] is None:
        init = DegreeStateField.seeded(kern.base, cfg["n"])
    else:
        init = DegreeStateField.seed_in_class(kern.base, cfg["seed_class"], cfg["n"])
    rep = solve_correlated(kern, params, init, cfg["dt"], cfg["tol"], n=cfg["n"],
                           scheme=cfg["scheme"], record_every=cfg["record_every"])
    tr = rep.trajectory
    rows = zip(tr["t"], tr["i"], tr["a"], tr["r"], tr["q"])
    return _csv_text(["t", "i", "a", "r", "q"], rows), rep.to_dict()


def cmd_tv_series(cfg, seed, jobs):
    from .fitting import observation_times
    from .timevarying import rate_eq21
    theta = _theta_from(cfg["theta"])
    t = observation_times(cfg["n"], cfg["bin_hours"], cfg["time_scale"])
    values = rate_eq21(theta, t, cfg["spectral_scale"]).values
    if cfg["noise"]:
        values = values * (1 + cfg["noise"] * np.random.default_rng(seed).standard_normal(values.size))
    return _csv_text(["t", "rate"], zip(t, values))


def cmd_fit(cfg, seed, jobs):
    from .fitting import FitProblem, fit_theta
    y = read_series(cfg["input"])
    init = _theta_from(cfg["initial_theta"]) if cfg["initial_theta"] is not None else None
    res = fit_theta(FitProblem(y, cfg["time_scale"], cfg["bin_hours"], init),
                    cfg["restarts"], seed, cfg["max_iter"])
    text = json.dumps(res.to_dict(), indent=2) + "\n"
    if not res.converged:
        raise NumericalFailure(("no restart converged", text))
    return text


def cmd_cluster(cfg, seed, jobs):
    from .ksc import distance_matrix, hartigan_table, select_k_hartigan, silhouette
    from .smoothing import gaussian_smooth
    names, X = read_corpus(cfg["input"])
    if cfg["smooth_sigma"]:
        X = np.vstack([gaussian_smooth(x, cfg["smooth_sigma"]) for x in X])
    ks = [k for k in cfg["ks"] if k < X.shape[0]]
    H, models = hartigan_table(X, ks, seed, cfg["restarts"], cfg["max_shift"])
    D = distance_matrix(X, cfg["max_shift"])
    sil = {k: silhouette(models[k], X, D=D) for k in models if 2 <= k < X.shape[0]}
    k_sel = cfg["k"] or select_k_hartigan(H) or max(sil, key=sil.get)
    if k_sel not in models:
        from .ksc import ksc_cluster
        models[k_sel] = ksc_cluster(X, k_sel, seed)
    m = models[k_sel]
    report = {"names": list(names), "k": k_sel,
              "assignments": {n: int(a) for n, a in zip(names, m.assignments)},
              "centroids": m.centroids.tolist(), "within_cost": m.within_cost.tolist(),
              "hartigan": {str(k): v for k, v in H.items()},
              "silhouette": {str(k): v for k, v in sil.items()}}
    return json.dumps(report, indent=2) + "\n"


def cmd_predict(cfg, seed, jobs):
    from .experiments import predict_experiment
    y = read_series(cfg["input"])
    rep = predict_experiment(y, cfg["train_fraction"], cfg["time_scale"], cfg["restarts"],
                             seed, cfg["bin_hours"])
    return json.dumps(rep, indent=2) + "\n"


def cmd_smooth(cfg, seed, jobs):
    from .smoothing import gaussian_smooth
    y = read_series(cfg["input"])
    s = gaussian_smooth(y, cfg["sigma"])
    return _csv_text(["t", "count"], zip(range(s.size), s))


COMMANDS = {
    "ensemble": cmd_ensemble, "sweep": cmd_sweep, "gen-graph": cmd_gen_graph,
    "simulate": cmd_simulate, "solve": cmd_solve, "tv-series": cmd_tv_series,
    "fit": cmd_fit, "cluster": cmd_cluster, "predict": cmd_predict, "smooth": cmd_smooth,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infospread", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "") + " command")
        sp.add_argument("--config", help="JSON config file (or a sidecar from a previous run)")
        sp.add_argument("--seed", type=int, help="master RNG seed (u64)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
        if name in ("fit", "predict", "smooth", "cluster"):
            sp.add_argument("input", nargs="?", help="series CSV, corpus path, or '-' for stdin")
    return ap


def _write_sidecar(command, cfg, seed, out, extra):
    side = {"command": command, "config": cfg, "seed": seed, "versions": _versions()}
    if extra:
        side["result"] = extra
    text = json.dumps(side, indent=2, default=float)
    if out in (None, "-"):
        sys.stderr.write(text + "\n")
    else:
        Path(str(out) + ".meta.json").write_text(text + "\n")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        raw = None
        if args.config:
            try:
                raw = json.loads(Path(args.config).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
        cfg, side_seed = resolve_config(args.command, raw)
        if getattr(args, "input", None) is not None:
            cfg["input"] = args.input
        seed = args.seed if args.seed is not None else side_seed
        if seed is None and args.command in STOCHASTIC:
            seed = int(np.random.SeedSequence().entropy % (2 ** 63))
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = COMMANDS[args.command](cfg, seed, args.jobs)
        extra = None
        if isinstance(out, tuple):
            out, extra = out
        _emit(out, args.out)
        _write_sidecar(args.command, cfg, seed, args.out, extra)
        return EXIT_OK
    except NumericalFailure as exc:
        msg, text = exc.args[0]
        try:
            _emit(text, args.out)
        except OSError:
            pass
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConvergenceError, InstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
