"""K-Spectral Centroid clustering of activity series.

The distance between series ``x`` and ``y`` is invariant to scaling and to
integer time shifts of ``y``:

    d(x, y) = min_{nu, h} ||x - nu * y_(h)|| / ||x||,   y_(h)[t] = y[t + h],

with zero padding outside the series and ``|h| <= H`` (``H = len // 4`` by
default).  For fixed ``h`` the optimal ``nu`` is ``<x, y_(h)> / ||y_(h)||^2``,
so ``d^2 = 1 - <x, y_(h)>^2 / (||x||^2 ||y_(h)||^2)``.  A positive ``h``
means ``y`` lags ``x`` by ``h`` bins.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, ClusterMixin

from .exceptions import DomainError

__all__ = [
    "ksc_distance", "distance_matrix", "KSpectralCentroid", "ClusterModel",
    "ksc_cluster", "silhouette", "hartigan_index", "hartigan_table",
    "select_k_hartigan", "representative", "HARTIGAN_THRESHOLD", "HARTIGAN_RESTARTS",
]

HARTIGAN_THRESHOLD = 200.0
HARTIGAN_RESTARTS = 8


def _max_shift(length: int, max_shift: int | None) -> int:
    return length // 4 if max_shift is None else int(max_shift)


def _shift_stack(y: np.ndarray, H: int) -> np.ndarray:
    """Rows ``y_(h)`` for ``h = -H .. H``."""
    L = y.size
    padded = np.concatenate([np.zeros(H), y, np.zeros(H)])
    return sliding_window_view(padded, L)  # row j is y_(j - H)


def _best_shift(x: np.ndarray, y: np.ndarray, H: int):
    """Return (d, nu, h) minimizing the scaled residual."""
    nx2 = float(x @ x)
    if nx2 == 0:
        raise DomainError("distance undefined for a zero-norm x")
    ys = _shift_stack(y, H)
    dots = ys @ x
    ny2 = np.einsum("ij,ij->i", ys, ys)
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(ny2 > 0, dots * dots / ny2, 0.0)
    # ties go to the smallest |h|, then to the negative shift
    order = np.argsort(np.abs(np.arange(-H, H + 1)), kind="stable")
    j = order[np.argmax(gain[order])]
    d2 = max(0.0, 1.0 - gain[j] / nx2)
    nu = dots[j] / ny2[j] if ny2[j] > 0 else 0.0
    return float(np.sqrt(d2)), float(nu), int(j - H)


def ksc_distance(x, y, max_shift: int | None = None) -> tuple[float, float, int]:
    """Scale- and shift-invariant distance.

    Parameters
    ----------
    x, y : array_like
        Equal-length series; ``x`` must not be all zero.
    max_shift : int, optional
        Largest shift searched, default ``len(x) // 4``.

    Returns
    -------
    d : float
        Distance in ``[0, 1]``.
    nu : float
        Optimal scale applied to the shifted ``y``.
    h : int
        Optimal shift (``y`` lags ``x`` by ``h`` bins).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DomainError("series lengths differ")
    return _best_shift(x, y, _max_shift(x.size, max_shift))


def distance_matrix(series, max_shift: int | None = None) -> np.ndarray:
    """``D[i, j] = d(series[i], series[j])`` (not symmetric)."""
    X = np.asarray(series, dtype=float)
    H = _max_shift(X.shape[1], max_shift)
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = _best_shift(X[i], X[j], H)[0]
    return D


def _align(x: np.ndarray, h: int) -> np.ndarray:
    """Shift ``x`` by ``-h`` (zero padded) so it lines up with the reference."""
    out = np.zeros_like(x)
    if h > 0:
        out[h:] = x[:-h]
    elif h < 0:
        out[:h] = x[-h:]
    else:
        out[:] = x
    return out


def _centroid(members: np.ndarray, ref: np.ndarray | None, H: int) -> np.ndarray:
    """Smallest-eigenvalue eigenvector of ``sum_i (I - xh_i xh_i^T)``."""
    L = members.shape[1]
    M = np.zeros((L, L))
    for x in members:
        if ref is not None and np.any(ref):
            _, _, h = _best_shift(x, ref, H)
            x = _align(x, h)
        nrm = np.linalg.norm(x)
        if nrm == 0:
            continue
        xh = x / nrm
        M += np.eye(L) - np.outer(xh, xh)
    w, v = np.linalg.eigh(M)
    mu = v[:, 0]
    if mu.sum() < 0:
        mu = -mu
    return mu


def _cluster_cost(members: np.ndarray, mu: np.ndarray, H: int) -> float:
    return float(sum(_best_shift(x, mu, H)[0] ** 2 for x in members))


@dataclass
class ClusterModel:
    """Result of one K-SC run.

    ``within_cost[j]`` is the sum of squared distances of cluster ``j``'s
    members to its centroid; ``cost_history`` is the total after every
    assignment and every update step.
    """

    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    within_cost: np.ndarray
    n_iter: int
    cost_history: list = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.within_cost))

    def to_dict(self) -> dict:
        return {"k": self.k, "assignments": self.assignments.tolist(),
                "centroids": self.centroids.tolist(),
                "within_cost": self.within_cost.tolist(), "n_iter": self.n_iter}


def _farthest_point_init(X, k, H, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    dmin = np.array([_best_shift(X[i], X[chosen[0]], H)[0] for i in range(n)])
    dmin[chosen[0]] = -1.0
    while len(chosen) < k:
        j = int(np.argmax(dmin))
        chosen.append(j)
        dj = np.array([_best_shift(X[i], X[j], H)[0] for i in range(n)])
        dmin = np.minimum(dmin, dj)
        dmin[chosen] = -1.0
    return np.array([X[j] / np.linalg.norm(X[j]) for j in chosen])


def ksc_cluster(series, k: int, seed: int = 0, max_iter: int = 100,
                max_shift: int | None = None) -> ClusterModel:
    """One K-SC run from a farthest-point initialization.

    Alternates nearest-centroid assignment with the spectral centroid update.
    A centroid update is kept only if it does not raise its cluster's cost,
    which makes the objective nonincreasing.  Empty clusters are re-seeded
    with the series farthest from its current centroid.
    """
    X = np.asarray(series, dtype=float)
    if X.ndim != 2:
        raise DomainError("series must be a 2-d array (n_series, length)")
    n, L = X.shape
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= number of series")
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise DomainError("all series must be nonzero")
    H = _max_shift(L, max_shift)
    rng = np.random.default_rng(seed)
    C = _farthest_point_init(X, k, H, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        D = np.array([[_best_shift(X[i], C[j], H)[0] for j in range(k)] for i in range(n)])
        new = np.argmin(D, axis=1)
        dmin = D[np.arange(n), new]
        for j in range(k):
            if not np.any(new == j):
                far = int(np.argmax(dmin))
                C[j] = X[far] / np.linalg.norm(X[far])
                new[far] = j
                dmin[far] = 0.0
        history.append(float(np.sum(dmin ** 2)))
        stable = labels is not None and np.array_equal(new, labels)
        labels = new
        if stable:
            break
        for j in range(k):
            members = X[labels == j]
            old_cost = _cluster_cost(members, C[j], H)
            mu = _centroid(members, C[j], H)
            if _cluster_cost(members, mu, H) <= old_cost:
                C[j] = mu
        history.append(float(sum(_cluster_cost(X[labels == j], C[j], H) for j in range(k))))
    within = np.array([_cluster_cost(X[labels == j], C[j], H) for j in range(k)])
    return ClusterModel(k, C, labels, within, it, history)


class KSpectralCentroid(ClusterMixin, BaseEstimator):
    """K-SC clustering as an estimator.

    Parameters
    ----------
    n_clusters : int, default=3
    n_init : int, default=1
        Independent runs (seeds ``random_state + r``); the lowest cost wins.
    max_iter : int, default=100
    max_shift : int or None
        Shift search range; ``None`` means a quarter of the series length.
    random_state : int, default=0
    """

    def __init__(self, n_clusters: int = 3, n_init: int = 1, max_iter: int = 100,
                 max_shift: int | None = None, random_state: int = 0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.max_shift = max_shift
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        best = None
        for r in range(max(1, int(self.n_init))):
            m = ksc_cluster(X, self.n_clusters, self.random_state + r, self.max_iter, self.max_shift)
            if best is None or m.total_cost < best.total_cost:
                best = m
        self.model_ = best
        self.cluster_centers_ = best.centroids
        self.labels_ = best.assignments
        self.inertia_ = best.total_cost
        self.n_iter_ = best.n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        H = _max_shift(X.shape[1], self.max_shift)
        D = np.array([[_best_shift(x, c, H)[0] for c in self.cluster_centers_] for x in X])
        return np.argmin(D, axis=1)


def silhouette(model: ClusterModel, series, max_shift: int | None = None,
               D: np.ndarray | None = None) -> float:
    """Mean silhouette with the symmetrized distance ``(d(x,y) + d(y,x)) / 2``.

    Singleton clusters contribute 0, as does any series with ``a = b = 0``.
    """
    if model.k < 2:
        raise DomainError("silhouette needs k >= 2")
    if D is None:
        D = distance_matrix(series, max_shift)
    S = 0.5 * (D + D.T)
    labels = np.asarray(model.assignments)
    n = labels.size
    vals = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        if own.sum() <= 1:
            continue
        a = S[i, own].sum() / (own.sum() - 1)
        b = min(S[i, labels == c].mean() for c in np.unique(labels) if c != labels[i])
        denom = max(a, b)
        vals[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(vals.mean())


def _best_cost(series, k, seed, restarts, max_shift):
    best = None
    for r in range(restarts):
        m = ksc_cluster(series, k, seed + r, max_shift=max_shift)
        if best is None or m.total_cost < best.total_cost:
            best = m
    return best


def hartigan_from_costs(w_k: float, w_k1: float, n: int, k: int) -> float:
    """``(W(k)/W(k+1) - 1) (n - k - 1)``; ``inf`` when ``W(k+1) = 0 < W(k)``."""
    if w_k1 == 0:
        return 0.0 if w_k == 0 else float("inf")
    return (w_k / w_k1 - 1.0) * (n - k - 1)


def hartigan_index(series, k: int, seed: int = 0, restarts: int = HARTIGAN_RESTARTS,
                   max_shift: int | None = None) -> float:
    """Hartigan's index ``H(k)`` from best-of-``restarts`` K-SC costs."""
    X = np.asarray(series, dtype=float)
    if k < 1:
        raise DomainError("k must be >= 1")
    w_k = _best_cost(X, k, seed, restarts, max_shift).total_cost
    w_k1 = _best_cost(X, k + 1, seed, restarts, max_shift).total_cost
    return hartigan_from_costs(w_k, w_k1, X.shape[0], k)


def hartigan_table(series, ks, seed: int = 0, restarts: int = HARTIGAN_RESTARTS,
                   max_shift: int | None = None):
    """Return ``(H, models)``: ``H[k]`` for each ``k`` in ``ks`` and the best model per k."""
    X = np.asarray(series, dtype=float)
    ks = sorted(set(int(k) for k in ks))
    models = {}
    for k in sorted(set(ks) | {k + 1 for k in ks}):
        if k <= X.shape[0]:
            models[k] = _best_cost(X, k, seed, restarts, max_shift)
    H = {k: hartigan_from_costs(models[k].total_cost, models[k + 1].total_cost, X.shape[0], k)
         for k in ks if k + 1 in models}
    return H, models


def select_k_hartigan(H: dict, threshold: float = HARTIGAN_THRESHOLD) -> int | None:
    """Smallest ``k`` with ``H(k) < threshold`` (None if no k qualifies)."""
    for k in sorted(H):
        if H[k] < threshold:
            return k
    return None


def representative(model: ClusterModel, series, cluster: int, max_shift: int | None = None) -> int:
    """Index of the member closest to the cluster centroid (ties: lowest index)."""
    X = np.asarray(series, dtype=float)
    H = _max_shift(X.shape[1], max_shift)
    idx = np.flatnonzero(model.assignments == cluster)
    if idx.size == 0:
        raise DomainError("empty cluster")
    d = [_best_shift(X[i], model.centroids[cluster], H)[0] for i in idx]
    return int(idx[int(np.argmin(d))])
