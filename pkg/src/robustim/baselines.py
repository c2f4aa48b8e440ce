"""Benchmark seed-selection algorithms to compare against the robust solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascade import build_pool
from .errors import ParameterError
from .graphs import Graph
from .optimize import FunctionFamily, SeedSet, as_seed_set, lazy_greedy
from .seeding import derive_seed


def random_seed(graph: Graph, k: int, trials: int = 100, rng_seed: int = 0) -> list[SeedSet]:
    """``trials`` independent uniform size-k subsets; callers average the
    resulting values to tame the variance of a single draw."""
    if not 1 <= k <= graph.n:
        raise ParameterError(f"k={k} must lie in [1, {graph.n}]")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    return [
        as_seed_set(rng.choice(graph.n, size=k, replace=False)) for _ in range(trials)
    ]


def top_k_degree(graph: Graph, k: int) -> SeedSet:
    """The k nodes of largest out-degree, ties broken by lowest id."""
    if not 1 <= k <= graph.n:
        raise ParameterError(f"k={k} must lie in [1, {graph.n}]")
    degrees = np.array([adj.size for adj in graph.out_adjacency], dtype=np.int64)
    ranked = np.lexsort((np.arange(graph.n), -degrees))
    return as_seed_set(ranked[:k])


def random_greedy(family: FunctionFamily, k: int, rng_seed: int = 0) -> SeedSet:
    """Greedy on every function separately, then one of the l outputs u.a.r."""
    picks = per_function_greedy(family, k)
    rng = np.random.default_rng(rng_seed)
    return picks[int(rng.integers(family.l))]


def per_function_greedy(family: FunctionFamily, k: int) -> list[SeedSet]:
    sets = []
    for i in range(family.l):
        one_hot = np.zeros(family.l)
        one_hot[i] = 1.0
        sets.append(lazy_greedy(family, one_hot, k))
    return sets


@dataclass(frozen=True)
class IntervalBounds:
    """Per-arc probability intervals [p_lo, p_hi]."""

    p_lo: np.ndarray
    p_hi: np.ndarray

    def __post_init__(self):
        if self.p_lo.shape != self.p_hi.shape:
            raise ParameterError("bound vectors must have equal shape")
        if np.any(self.p_lo < 0) or np.any(self.p_hi > 1) or np.any(self.p_lo > self.p_hi):
            raise ParameterError("bounds must satisfy 0 <= p_lo <= p_hi <= 1")


def derive_intervals(family: FunctionFamily) -> IntervalBounds:
    """Elementwise envelope of the family's probability vectors, the natural
    interval input for the lower/upper-bound greedy baseline."""
    stacked = np.stack(family.probs)
    return IntervalBounds(p_lo=stacked.min(axis=0), p_hi=stacked.max(axis=0))


def lu_greedy(
    graph: Graph, bounds: IntervalBounds, k: int, R: int = 1000, rng_seed: int = 0
) -> SeedSet:
    """Greedy under the lower bounds and under the upper bounds; keep whichever
    of the two sets scores higher when the lower bounds are taken as true."""
    if bounds.p_lo.shape != (graph.m,):
        raise ParameterError("bounds do not match the graph's arc count")
    lo_pool = build_pool(graph, bounds.p_lo, R, derive_seed(rng_seed, 0))
    hi_pool = build_pool(graph, bounds.p_hi, R, derive_seed(rng_seed, 1))
    lo_pool.ensure_index()
    hi_pool.ensure_index()
    lo_family = FunctionFamily(graph=graph, probs=[bounds.p_lo], pools=[lo_pool])
    hi_family = FunctionFamily(graph=graph, probs=[bounds.p_hi], pools=[hi_pool])
    s_lo = lazy_greedy(lo_family, np.ones(1), k)
    s_hi = lazy_greedy(hi_family, np.ones(1), k)
    value_lo = float(lo_family.pool_values(s_lo)[0])
    value_hi = float(lo_family.pool_values(s_hi)[0])
    return s_lo if value_lo >= value_hi else s_hi
