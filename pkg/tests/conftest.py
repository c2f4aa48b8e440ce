import numpy as np
import pytest

from robustim.graphs import Graph


def random_digraph(rng: np.random.Generator, n: int, m: int, d: int = 1) -> Graph:
    """A random simple directed graph with exactly m arcs."""
    pairs = set()
    while len(pairs) < m:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u != v:
            pairs.add((u, v))
    arcs = sorted(pairs)
    src = np.array([a[0] for a in arcs], dtype=np.int64)
    dst = np.array([a[1] for a in arcs], dtype=np.int64)
    features = rng.uniform(-1.0, 1.0, size=(m, d))
    return Graph(n, src, dst, features)


def star_graph(n_leaves: int, d: int = 1) -> Graph:
    """Center node 0 with arcs to each of n_leaves leaves."""
    src = np.zeros(n_leaves, dtype=np.int64)
    dst = np.arange(1, n_leaves + 1, dtype=np.int64)
    return Graph(n_leaves + 1, src, dst, np.zeros((n_leaves, d)))


def reachable_from(graph: Graph, alive_arcs: set[int], seeds) -> set[int]:
    """Plain-python reachability oracle over a chosen arc subset."""
    seen = set(int(v) for v in seeds)
    frontier = list(seen)
    while frontier:
        u = frontier.pop()
        for e in graph.out_adjacency[u]:
            if int(e) in alive_arcs:
                v = int(graph.dst[e])
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
    return seen


@pytest.fixture
def rng():
    return np.random.default_rng(20240813)
