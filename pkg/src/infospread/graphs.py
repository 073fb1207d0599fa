"""Explicit random graphs for Monte Carlo runs.

Two generators are provided: strict Barabási–Albert preferential attachment
and the configuration model driven by an i.i.d. power-law degree sequence.
Graphs are stored as a sorted edge array plus a CSR adjacency, which is what
the simulator consumes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .ensemble import DegreeDistribution
from .exceptions import DomainError

__all__ = [
    "Graph",
    "generate_ba",
    "sample_powerlaw_sequence",
    "configuration_model",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph.

    Attributes
    ----------
    n : int
        Number of vertices, labelled ``0 .. n-1``.
    edges : ndarray of shape (E, 2)
        Each undirected edge once, with ``u < v``, sorted lexicographically.
    target_degrees : ndarray or None
        The requested degree sequence when the graph came from stub matching.
    """

    n: int
    edges: np.ndarray
    target_degrees: np.ndarray | None = None
    _csr: sparse.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise DomainError("edge endpoint outside [0, n)")
            if np.any(e[:, 0] >= e[:, 1]):
                raise DomainError("edges must satisfy u < v (no self-loops)")
            order = np.lexsort((e[:, 1], e[:, 0]))
            e = e[order]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise DomainError("multi-edge present")
        object.__setattr__(self, "edges", e)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        adj = sparse.csr_matrix((np.ones(rows.size, dtype=np.float64), (rows, cols)),
                                shape=(self.n, self.n))
        adj.sort_indices()
        object.__setattr__(self, "_csr", adj)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degree_sequence(self) -> np.ndarray:
        return np.diff(self._csr.indptr).astype(np.int64)

    @property
    def adjacency(self) -> list[np.ndarray]:
        """Per-vertex sorted neighbour arrays."""
        ptr, idx = self._csr.indptr, self._csr.indices
        return [idx[ptr[v]:ptr[v + 1]] for v in range(self.n)]

    @property
    def csr(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix (shared, do not mutate)."""
        return self._csr

    def neighbors(self, v: int) -> np.ndarray:
        ptr = self._csr.indptr
        return self._csr.indices[ptr[v]:ptr[v + 1]]

    @property
    def l1_gap(self) -> int | None:
        """``Σ |target − realized|`` degree gap, or None without targets."""
        if self.target_degrees is None:
            return None
        return int(np.abs(self.target_degrees - self.degree_sequence).sum())


def generate_ba(n: int, m_edges: int = 1, seed: int = 0) -> Graph:
    """Barabási–Albert graph by strict preferential attachment.

    Growth starts from a single vertex; the second vertex attaches to it
    (the self-seeded first edge).  Every later vertex ``v`` attaches to
    ``min(m_edges, v)`` distinct existing vertices chosen with probability
    proportional to their current degree.

    Parameters
    ----------
    n : int
        Final number of vertices, ``n > m_edges``.
    m_edges : int
        Edges added per arriving vertex.
    seed : int
        Seed for ``numpy.random.default_rng``.
    """
    if int(m_edges) < 1 or int(n) <= int(m_edges):
        raise DomainError(f"need n > m_edges >= 1, got n={n}, m_edges={m_edges}")
    n, m_edges = int(n), int(m_edges)
    rng = np.random.default_rng(seed)
    # every edge endpoint appears once in `ends`; uniform draws from it are
    # degree-proportional draws over vertices
    ends = np.empty(2 * m_edges * n, dtype=np.int64)
    n_ends = 0
    edges = []
    for v in range(1, n):
        if v <= m_edges:
            targets = list(range(v))
        else:
            chosen: set[int] = set()
            while len(chosen) < m_edges:
                chosen.add(int(ends[rng.integers(n_ends)]))
            targets = sorted(chosen)
        for u in targets:
            edges.append((u, v))
            ends[n_ends] = u
            ends[n_ends + 1] = v
            n_ends += 2
    return Graph(n, np.array(edges, dtype=np.int64))


def sample_powerlaw_sequence(dist: DegreeDistribution, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` i.i.d. degrees from ``dist`` with an even total.

    If the sum is odd, one uniformly chosen entry is redrawn until the parity
    flips.
    """
    if int(n) < 2:
        raise DomainError("need n >= 2")
    rng = np.random.default_rng(seed)
    deg = rng.choice(dist.degrees, size=int(n), p=dist.weights)
    if deg.sum() % 2:
        if np.all(dist.degrees % 2 == 1) and int(n) % 2 == 1:
            raise DomainError("odd n with only odd degrees cannot have an even sum")
        while deg.sum() % 2:
            j = rng.integers(n)
            deg[j] = rng.choice(dist.degrees, p=dist.weights)
    return deg.astype(np.int64)


def _match_stubs(deg, rng):
    stubs = np.repeat(np.arange(deg.size, dtype=np.int64), deg)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    pairs.sort(axis=1)
    loops = pairs[:, 0] == pairs[:, 1]
    kept = pairs[~loops]
    uniq = np.unique(kept, axis=0)
    defects = int(loops.sum()) + kept.shape[0] - uniq.shape[0]
    return uniq, defects


def configuration_model(degrees, seed: int = 0, max_tries: int = 10) -> Graph:
    """Configuration-model graph by random stub matching.

    Up to ``max_tries`` independent matchings are drawn and the first simple
    one is kept.  If none is simple, the last matching is cleaned by deleting
    self-loops and duplicate edges, so realized degrees may fall below the
    targets; ``Graph.l1_gap`` reports the shortfall.

    Parameters
    ----------
    degrees : sequence of int
        Target degrees with an even sum.
    seed : int
        RNG seed.
    max_tries : int
        Number of matchings tried before falling back to deletion.
    """
    deg = np.asarray(degrees, dtype=np.int64)
    if deg.ndim != 1 or np.any(deg < 0):
        raise DomainError("degrees must be a 1-d sequence of nonnegative integers")
    if deg.sum() % 2:
        raise DomainError("degree sum must be even")
    rng = np.random.default_rng(seed)
    for _ in range(max(1, int(max_tries))):
        edges, defects = _match_stubs(deg, rng)
        if defects == 0:
            break
    return Graph(int(deg.size), edges, target_degrees=deg)


def write_edge_list(graph: Graph, path) -> None:
    """Write ``u v`` lines, 0-indexed and sorted; a header comment records n."""
    with open(path, "w") as fh:
        fh.write(f"# n={graph.n}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read an edge list written by :func:`write_edge_list` (or any ``u v`` file)."""
    pairs = []
    header_n = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("n="):
                    header_n = int(line[1:].strip()[2:])
                continue
            u, v = line.split()[:2]
            u, v = int(u), int(v)
            pairs.append((min(u, v), max(u, v)))
    e = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if n is None:
        n = header_n if header_n is not None else (int(e.max()) + 1 if e.size else 0)
    return Graph(int(n), e)
