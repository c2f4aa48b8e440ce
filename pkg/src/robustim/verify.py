"""Exact brute-force robust oracle and hand-built worst-case instances.

The fixtures carry explicit probability vectors (not hyperparameters): each
one realizes a known separation and is sized so the exact influence oracle can
certify it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .cascade import EXACT_ARC_LIMIT, exact_influence
from .errors import CapacityError, ParameterError, ParseError
from .graphs import Graph

BRUTE_FORCE_SET_LIMIT = 100_000


@dataclass(frozen=True)
class Fixture:
    """A graph, explicit per-function probability vectors, and named nodes."""

    graph: Graph
    probs: list[np.ndarray]
    labels: dict[str, int] = field(default_factory=dict)


def brute_force_robust(
    graph: Graph, probs: Sequence[np.ndarray], k: int
) -> tuple[tuple[int, ...], float]:
    """Exhaustive max over size-k sets of the min over functions of exact
    influence.  Ties go to the lexicographically smallest set."""
    if not probs:
        raise ParameterError("need at least one probability vector")
    if not 1 <= k <= graph.n:
        raise ParameterError(f"k={k} must lie in [1, {graph.n}]")
    n_sets = math.comb(graph.n, k)
    if n_sets > BRUTE_FORCE_SET_LIMIT:
        raise CapacityError(
            f"C({graph.n},{k}) = {n_sets} candidate sets exceed the limit of "
            f"{BRUTE_FORCE_SET_LIMIT}"
        )
    for i, p in enumerate(probs):
        stochastic = int(np.count_nonzero((p > 0.0) & (p < 1.0)))
        if stochastic > EXACT_ARC_LIMIT:
            raise CapacityError(
                f"function {i} has {stochastic} stochastic arcs, above the exact "
                f"limit of {EXACT_ARC_LIMIT}"
            )
    best_set: tuple[int, ...] | None = None
    best_value = -np.inf
    for cand in combinations(range(graph.n), k):
        worst = np.inf
        for p in probs:
            worst = min(worst, exact_influence(graph, p, cand))
            if worst <= best_value:
                break
        if worst > best_value:
            best_value = worst
            best_set = cand
    assert best_set is not None
    return best_set, float(best_value)


def ratio_gap_instance(n_leaves: int) -> Fixture:
    """Two functions on a double-broadcast graph separating the min-value and
    min-ratio objectives at budget 1.

    Node u reaches every leaf, node v a sqrt(n_leaves)-sized subset.  Function
    one keeps all arcs; function two starves u down to one weak arc while v
    keeps its block.  The value objective then prefers v (worst case about
    sqrt(n_leaves) nodes) while per-function ratios favor u, whose worst case
    is a single additional node in expectation.
    """
    root = math.isqrt(n_leaves)
    if n_leaves < 4 or root * root != n_leaves:
        raise ParameterError("n_leaves must be a perfect square >= 4")
    u, v = 0, 1
    leaves = list(range(2, 2 + n_leaves))
    src, dst = [], []
    for leaf in leaves:
        src.append(u)
        dst.append(leaf)
    for leaf in leaves[:root]:
        src.append(v)
        dst.append(leaf)
    n = 2 + n_leaves
    m = len(src)
    graph = Graph(n, np.array(src), np.array(dst), np.zeros((m, 1)))
    p_full = np.ones(m)
    # Weak arc strong enough that u's worst-case ratio still beats v's:
    # q * (1 + n_leaves) > 2 * root, with 20% margin.
    q = min(0.95, 1.2 * 2.0 * root / (1.0 + n_leaves))
    p_starved = np.zeros(m)
    p_starved[0] = q
    p_starved[n_leaves:] = 1.0
    return Fixture(graph=graph, probs=[p_full, p_starved], labels={"u": u, "v": v})


def improper_gap_instance(n_leaves_per_side: int) -> Fixture:
    """Two opposed stars showing that mixtures beat every single set.

    Function one activates u's star and kills v's; function two the reverse.
    Every single seed then has worst-case value exactly 1, while the uniform
    mixture over {u} and {v} scores (n_leaves_per_side + 2) / 2 on both
    functions.
    """
    if n_leaves_per_side < 1:
        raise ParameterError("n_leaves_per_side must be >= 1")
    L = n_leaves_per_side
    u, v = 0, 1
    src, dst = [], []
    for leaf in range(2, 2 + L):
        src.append(u)
        dst.append(leaf)
    for leaf in range(2 + L, 2 + 2 * L):
        src.append(v)
        dst.append(leaf)
    graph = Graph(2 + 2 * L, np.array(src), np.array(dst), np.zeros((2 * L, 1)))
    p_u = np.concatenate([np.ones(L), np.zeros(L)])
    p_v = np.concatenate([np.zeros(L), np.ones(L)])
    return Fixture(graph=graph, probs=[p_u, p_v], labels={"u": u, "v": v})


def lipschitz_tight_instance(n: int, lam: float) -> Fixture:
    """Cycle plus center showing the n*m sensitivity bound is achievable.

    The cycle's n arcs carry probability 1 - lam.  The center's n spokes carry
    lam in the first vector and 1/n in the second; the influence of the center
    then shifts by order n^2 * (1/n) between the vectors.
    """
    if n < 10:
        raise ParameterError("n must be >= 10")
    if not 0.0 < lam < 1.0 / n:
        raise ParameterError("lam must lie in (0, 1/n)")
    center = n
    src, dst = [], []
    for i in range(n):
        src.append(i)
        dst.append((i + 1) % n)
    for i in range(n):
        src.append(center)
        dst.append(i)
    graph = Graph(n + 1, np.array(src), np.array(dst), np.zeros((2 * n, 1)))
    base = np.concatenate([np.full(n, 1.0 - lam), np.full(n, lam)])
    bumped = np.concatenate([np.full(n, 1.0 - lam), np.full(n, 1.0 / n)])
    return Fixture(
        graph=graph, probs=[base, bumped], labels={"v_star": center}
    )


def save_probs(probs: Sequence[np.ndarray], path) -> None:
    """Companion file for an exported fixture: one probability vector per line."""
    with open(path, "w", encoding="ascii") as fh:
        for p in probs:
            fh.write(" ".join(repr(float(x)) for x in p) + "\n")


def load_probs(path, m: int) -> list[np.ndarray]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != m:
                raise ParseError(f"{path}:{lineno}: expected {m} probabilities, got {len(parts)}")
            try:
                row = np.array([float(x) for x in parts])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric probability") from exc
            if row.min() < 0.0 or row.max() > 1.0:
                raise ParseError(f"{path}:{lineno}: probability outside [0, 1]")
            out.append(row)
    return out
