"""Independent-cascade simulation and influence evaluation.

Three evaluation routes with one semantics (expected number of nodes reachable
from the seed set in a random live-edge subgraph, seeds included):

* ``simulate_cascade`` runs one stochastic diffusion;
* ``exact_influence`` enumerates live-edge subsets (small instances only);
* ``build_pool`` / ``pool_influence`` average reachability counts over a fixed
  collection of live-edge samples, which keeps greedy marginal gains
  consistent within an optimization run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, shortest_path

from .errors import CapacityError, ParameterError
from .graphs import Graph

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the scipy fallback test
    _HAVE_NUMBA = False

EXACT_ARC_LIMIT = 20
_ENUM_BLOCK = 1 << 16
_BFS_BLOCK_NODES = 2_000_000  # keeps stacked node ids well inside int32


def _closure_batch_py(
    alive: np.ndarray, src: np.ndarray, dst: np.ndarray, n: int, nbytes: int
) -> np.ndarray:
    """All-pairs reachability bitsets per live-edge sample (MSB-first bits)."""
    R, m = alive.shape
    out = np.zeros((R, n, nbytes), dtype=np.uint8)
    indptr = np.empty(n + 1, dtype=np.int64)
    fill = np.empty(n, dtype=np.int64)
    adj = np.empty(m, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    for r in range(R):
        indptr[:] = 0
        for e in range(m):
            if alive[r, e]:
                indptr[src[e] + 1] += 1
        for v in range(n):
            indptr[v + 1] += indptr[v]
            fill[v] = indptr[v]
        for e in range(m):
            if alive[r, e]:
                adj[fill[src[e]]] = dst[e]
                fill[src[e]] += 1
        for s in range(n):
            visited[:] = False
            visited[s] = True
            stack[0] = s
            top = 1
            while top > 0:
                top -= 1
                u = stack[top]
                out[r, s, u >> 3] |= np.uint8(1 << (7 - (u & 7)))
                for idx in range(indptr[u], indptr[u + 1]):
                    v = adj[idx]
                    if not visited[v]:
                        visited[v] = True
                        stack[top] = v
                        top += 1
    return out


if _HAVE_NUMBA:
    _closure_batch = njit(cache=True)(_closure_batch_py)
else:  # pragma: no cover
    _closure_batch = _closure_batch_py


def _popcount(a: np.ndarray, axis) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=axis, dtype=np.int64)


def _check_prob_vector(graph: Graph, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (graph.m,):
        raise ParameterError(f"probability vector has shape {p.shape}, expected ({graph.m},)")
    if graph.m and (p.min() < 0.0 or p.max() > 1.0):
        raise ParameterError("edge probabilities must lie in [0, 1]")
    return p


def _check_seed_set(graph: Graph, S: Iterable[int], allow_empty: bool = True) -> list[int]:
    nodes = sorted({int(v) for v in S})
    if nodes and (nodes[0] < 0 or nodes[-1] >= graph.n):
        raise ParameterError("seed outside [0, n)")
    if not nodes and not allow_empty:
        raise ParameterError("seed set must be nonempty")
    return nodes


def _reach_single(graph: Graph, alive_idx: np.ndarray, seeds: Sequence[int]) -> np.ndarray:
    """Boolean mask of nodes reachable from ``seeds`` using the given arcs."""
    reached = np.zeros(graph.n, dtype=bool)
    if not seeds:
        return reached
    n = graph.n
    # Virtual source node n points at every seed; one C-level BFS does the rest.
    src = np.concatenate([graph.src[alive_idx], np.full(len(seeds), n, dtype=np.int64)])
    dst = np.concatenate([graph.dst[alive_idx], np.asarray(list(seeds), dtype=np.int64)])
    adj = sp.csr_matrix(
        (np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n + 1, n + 1)
    )
    order = breadth_first_order(adj, i_start=n, directed=True, return_predecessors=False)
    reached[order[order != n]] = True
    return reached


def _counts_from(graph: Graph, alive: np.ndarray, seeds: Sequence[int]) -> np.ndarray:
    """Number of nodes reachable from ``seeds`` in each of B live-edge
    scenarios (``alive`` is (B, m) boolean).

    All scenarios are stacked into one block-diagonal graph with a shared
    virtual source, so a single linear-time BFS per block covers thousands of
    scenarios at once.
    """
    B = alive.shape[0]
    counts = np.zeros(B, dtype=np.int64)
    if not seeds:
        return counts
    seeds = np.asarray(list(seeds), dtype=np.int64)
    n = graph.n
    block = max(1, _BFS_BLOCK_NODES // (n + 1))
    for lo in range(0, B, block):
        hi = min(B, lo + block)
        rows, arcs = np.nonzero(alive[lo:hi])
        nb = hi - lo
        source = nb * n
        src = np.concatenate(
            [rows * n + graph.src[arcs], np.full(nb * seeds.size, source, dtype=np.int64)]
        )
        dst = np.concatenate(
            [rows * n + graph.dst[arcs], (np.arange(nb)[:, None] * n + seeds).ravel()]
        )
        adj = sp.csr_matrix(
            (np.ones(src.size, dtype=np.int8), (src, dst)),
            shape=(source + 1, source + 1),
        )
        order = breadth_first_order(
            adj, i_start=source, directed=True, return_predecessors=False
        )
        reached = order[order != source]
        counts[lo:hi] = np.bincount(reached // n, minlength=nb)
    return counts


def simulate_cascade(
    graph: Graph, p: np.ndarray, S: Iterable[int], rng: np.random.Generator
) -> set[int]:
    """One diffusion run: each newly activated node gets a single chance to
    activate each currently inactive out-neighbor with the arc probability."""
    p = _check_prob_vector(graph, p)
    seeds = _check_seed_set(graph, S, allow_empty=False)
    active = np.zeros(graph.n, dtype=bool)
    active[seeds] = True
    queue = list(seeds)
    while queue:
        u = queue.pop(0)
        for e in graph.out_adjacency[u]:
            v = int(graph.dst[e])
            if active[v]:
                continue
            if rng.random() < p[e]:
                active[v] = True
                queue.append(v)
    return set(np.flatnonzero(active).tolist())


def exact_influence(graph: Graph, p: np.ndarray, S: Iterable[int]) -> float:
    """Exact expected influence by enumerating live-edge outcomes.

    Arcs that cannot lie on any path from the seeds, and arcs with probability
    0 or 1, are resolved without enumeration; the remaining stochastic arcs
    are enumerated and must number at most ``EXACT_ARC_LIMIT``.
    """
    p = _check_prob_vector(graph, p)
    seeds = _check_seed_set(graph, S)
    if not seeds:
        return 0.0
    positive = p > 0.0
    potential = _reach_single(graph, np.flatnonzero(positive), seeds)
    kept = positive & potential[graph.src]
    certain_idx = np.flatnonzero(kept & (p >= 1.0))
    stoch_idx = np.flatnonzero(kept & (p < 1.0))
    ns = stoch_idx.shape[0]
    if ns > EXACT_ARC_LIMIT:
        raise CapacityError(
            f"{ns} stochastic arcs reachable from the seeds exceed the exact "
            f"limit of {EXACT_ARC_LIMIT}; use estimate_influence instead"
        )
    p_stoch = p[stoch_idx]
    shifts = np.arange(ns, dtype=np.uint64)
    total = 0.0
    n_subsets = 1 << ns
    for lo in range(0, n_subsets, _ENUM_BLOCK):
        hi = min(n_subsets, lo + _ENUM_BLOCK)
        ids = np.arange(lo, hi, dtype=np.uint64)
        bits = ((ids[:, None] >> shifts) & 1).astype(bool)
        alive = np.zeros((hi - lo, graph.m), dtype=bool)
        alive[:, certain_idx] = True
        alive[:, stoch_idx] = bits
        counts = _counts_from(graph, alive, seeds)
        weights = np.ones(hi - lo, dtype=np.float64)
        for j in range(ns):
            weights *= np.where(bits[:, j], p_stoch[j], 1.0 - p_stoch[j])
        total += float(np.dot(counts.astype(np.float64), weights))
    return total


@dataclass(frozen=True)
class InfluenceEstimate:
    mean: float
    stderr: float
    replicates: int


@dataclass(eq=False)
class SamplePool:
    """A fixed collection of live-edge samples drawn from one probability
    vector.  Immutable after construction; the optional reachability index
    (built on demand) accelerates repeated seed-set evaluations."""

    graph: Graph
    prob: np.ndarray
    alive: np.ndarray  # (R, m) bool
    rng_seed: int
    _reach: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.prob.setflags(write=False)
        self.alive.setflags(write=False)

    @property
    def R(self) -> int:
        return self.alive.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return self.alive

    @property
    def reach_index(self) -> np.ndarray:
        self.ensure_index()
        return self._reach

    def ensure_index(self) -> None:
        """Build the per-sample all-pairs reachability bitsets (R, n, n/8)."""
        if self._reach is not None:
            return
        g = self.graph
        nbytes = (g.n + 7) // 8
        if _HAVE_NUMBA:
            reach = _closure_batch(
                np.ascontiguousarray(self.alive), g.src, g.dst, g.n, nbytes
            )
        else:  # pragma: no cover - parity-tested separately
            reach = self._closure_scipy(nbytes)
        reach.setflags(write=False)
        self._reach = reach

    def _closure_scipy(self, nbytes: int) -> np.ndarray:
        g = self.graph
        n = g.n
        reach = np.empty((self.R, n, nbytes), dtype=np.uint8)
        eye = np.packbits(np.eye(n, dtype=bool), axis=1)
        for i in range(self.R):
            alive_idx = np.flatnonzero(self.alive[i])
            if alive_idx.size == 0:
                reach[i] = eye
                continue
            adj = sp.csr_matrix(
                (
                    np.ones(alive_idx.size, dtype=np.int8),
                    (g.src[alive_idx], g.dst[alive_idx]),
                ),
                shape=(n, n),
            )
            dist = shortest_path(adj, method="D", unweighted=True)
            reach[i] = np.packbits(np.isfinite(dist), axis=1)
        return reach

    def counts(self, seeds: Sequence[int]) -> np.ndarray:
        """Reachability count per sample for one seed set (int64)."""
        seeds = list(seeds)
        if not seeds:
            return np.zeros(self.R, dtype=np.int64)
        if self._reach is not None:
            rows = self._reach[:, seeds, :]
            merged = np.bitwise_or.reduce(rows, axis=1)
            return _popcount(merged, axis=1)
        return _counts_from(self.graph, self.alive, sorted(set(seeds)))


def build_pool(graph: Graph, p: np.ndarray, R: int, rng_seed: int) -> SamplePool:
    """Draw R live-edge samples, arc-independently with P[alive_e] = p_e.

    Sample i is a function of (rng_seed, i) only: rows are drawn in row-major
    order from one seeded stream, so pools with the same seed agree on their
    common prefix regardless of R or of how counting is parallelized later.
    """
    p = _check_prob_vector(graph, p)
    if R < 1:
        raise ParameterError("R must be >= 1")
    alive = np.empty((R, graph.m), dtype=bool)
    rng = np.random.default_rng(rng_seed)
    chunk = max(1, (1 << 22) // max(1, graph.m))
    for lo in range(0, R, chunk):
        hi = min(R, lo + chunk)
        alive[lo:hi] = rng.random((hi - lo, graph.m)) < p
    return SamplePool(graph=graph, prob=p.copy(), alive=alive, rng_seed=rng_seed)


def pool_influence(graph: Graph, pool: SamplePool, S: Iterable[int]) -> InfluenceEstimate:
    """Sample-average influence of S over the pool, with its standard error."""
    if pool.graph is not graph and pool.graph != graph:
        raise ParameterError("pool was built on a different graph")
    seeds = _check_seed_set(graph, S)
    counts = pool.counts(seeds)
    mean = float(counts.sum()) / pool.R
    if pool.R > 1:
        stderr = float(np.std(counts, ddof=1)) / float(np.sqrt(pool.R))
    else:
        stderr = 0.0
    return InfluenceEstimate(mean=mean, stderr=stderr, replicates=pool.R)


def estimate_influence(
    graph: Graph, p: np.ndarray, S: Iterable[int], R: int, rng_seed: int
) -> InfluenceEstimate:
    """Monte-Carlo influence estimate: a fresh pool of R samples, then the
    pool average."""
    pool = build_pool(graph, p, R, rng_seed)
    return pool_influence(graph, pool, S)
