"""Agent-based synchronous simulation of the four-state model on a graph.

Per step, with probabilities folded with the step ``dt``:

* an ignorant vertex with ``g`` active neighbours stays ignorant with
  probability ``(1 - dt*lam)**g``; otherwise it notices the item and becomes
  active with probability ``alpha`` or indifferent with ``1 - alpha``;
* an active vertex becomes quiet with probability ``dt*beta``.

Updates are synchronous (double buffered): a vertex activated during step
``t`` can pass the item on from step ``t + 1``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .graphs import Graph
from .meanfield import ModelParams

IGNORANT, ACTIVE, INDIFFERENT, QUIET = 0, 1, 2, 3
STATE_NAMES = ("ignorant", "active", "indifferent", "quiet")

__all__ = ["SimTrace", "simulate", "ensemble_prevalence", "run_seeds",
           "IGNORANT", "ACTIVE", "INDIFFERENT", "QUIET"]


@dataclass
class SimTrace:
    """Per-step state counts of one run.

    ``counts[t]`` holds (ignorant, active, indifferent, quiet) after ``t``
    steps; ``new_active[t]`` is the number of vertices that became active at
    step ``t`` (the seed counts at ``t = 0``).
    """

    counts: np.ndarray
    new_active: np.ndarray
    seed: int
    initial_active: int
    final_state: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.counts[0].sum())

    @property
    def steps(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def prevalence(self) -> float:
        last = self.counts[-1]
        return float(last[INDIFFERENT] + last[QUIET]) / self.n

    def to_csv(self, path_or_buf) -> None:
        own = isinstance(path_or_buf, str)
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(fh)
            w.writerow(["t", *STATE_NAMES, "new_active"])
            for t, (row, new) in enumerate(zip(self.counts, self.new_active)):
                w.writerow([t, *(int(x) for x in row), int(new)])
        finally:
            if own:
                fh.close()


def _check(params: ModelParams, dt: float):
    if dt <= 0 or dt * params.lam > 1.0 or dt * params.beta > 1.0:
        raise DomainError("need dt > 0, dt*lam <= 1 and dt*beta <= 1")


def simulate(graph: Graph, params: ModelParams, dt: float = 1.0, seed: int = 0,
             initial_active: int = 0, max_steps: int = 10_000_000) -> SimTrace:
    """Run one synchronous simulation until no active vertex remains.

    Parameters
    ----------
    graph : Graph
    params : ModelParams
    dt : float
        Step length; ``dt*lam`` and ``dt*beta`` are the per-step contact and
        quiescence probabilities.
    seed : int or numpy.random.SeedSequence
        Seed of the run's private generator.
    initial_active : int
        Vertex that starts active.
    """
    _check(params, dt)
    n = graph.n
    if not 0 <= int(initial_active) < n:
        raise DomainError("initial_active outside [0, n)")
    rng = np.random.default_rng(seed)
    adj = graph.csr
    log_stay = np.log1p(-dt * params.lam) if dt * params.lam < 1.0 else -np.inf
    p_quiet = dt * params.beta

    state = np.zeros(n, dtype=np.int8)
    state[int(initial_active)] = ACTIVE
    counts = [np.bincount(state, minlength=4)]
    new_active = [1]
    step = 0
    while counts[-1][ACTIVE] > 0 and step < max_steps:
        active = (state == ACTIVE)
        g = adj @ active.astype(np.float64)
        u_notice = rng.random(n)
        u_branch = rng.random(n)
        u_quiet = rng.random(n)
        nxt = state.copy()
        exposed = (state == IGNORANT) & (g > 0)
        with np.errstate(invalid="ignore"):
            p_notice = -np.expm1(g[exposed] * log_stay)
        noticed = np.flatnonzero(exposed)[u_notice[exposed] < p_notice]
        to_active = noticed[u_branch[noticed] < params.alpha]
        nxt[noticed] = INDIFFERENT
        nxt[to_active] = ACTIVE
        nxt[active & (u_quiet < p_quiet)] = QUIET
        state = nxt
        step += 1
        counts.append(np.bincount(state, minlength=4))
        new_active.append(to_active.size)
    return SimTrace(np.array(counts, dtype=np.int64), np.array(new_active, dtype=np.int64),
                    seed if isinstance(seed, (int, np.integer)) else -1,
                    int(initial_active), state)


def run_seeds(seed: int, runs: int) -> list[np.random.SeedSequence]:
    """Independent child streams of the master seed, one per run."""
    return np.random.SeedSequence(seed).spawn(runs)


def _one_run(graph, params, dt, child):
    rng = np.random.default_rng(child)
    v0 = int(rng.integers(graph.n))
    # the run's dynamics use a grandchild so the seed-vertex draw is separate
    return simulate(graph, params, dt, child.spawn(1)[0], v0).prevalence


def ensemble_prevalence(graph: Graph, params: ModelParams, runs: int = 100, seed: int = 0,
                        dt: float = 1.0, jobs: int = 1) -> tuple[float, float]:
    """Mean final aware fraction over runs with uniformly random seed vertices.

    Run ``j`` uses child ``j`` of ``SeedSequence(seed)``; results do not depend
    on ``jobs``.

    Returns
    -------
    (mean, stderr)
    """
    if int(runs) < 1:
        raise DomainError("runs must be >= 1")
    _check(params, dt)
    children = run_seeds(seed, int(runs))
    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            vals = list(ex.map(lambda c: _one_run(graph, params, dt, c), children))
    else:
        vals = [_one_run(graph, params, dt, c) for c in children]
    vals = np.asarray(vals)
    stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), stderr
