"""Directed graphs with per-arc features, synthetic generators, and file I/O.

A graph is a fixed set of n nodes (ids 0..n-1) and an ordered list of directed
arcs, each carrying a d-dimensional feature vector with entries in [-1, 1].
Generators produce undirected topologies; every undirected edge is stored as
two opposite arcs sharing one feature vector, because diffusion is directed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .errors import ParameterError, ParseError

GENERATOR_MODELS = ("barabasi_albert", "watts_strogatz", "erdos_renyi", "configuration")
FEATURE_DISTS = ("uniform_cube", "normal_clipped", "rademacher")


class Arc(NamedTuple):
    src: int
    dst: int
    features: np.ndarray


class Graph:
    """Immutable directed graph with one feature vector per arc.

    Arrays are locked after construction; the object is safe to share across
    worker processes and threads.
    """

    def __init__(self, n: int, src: np.ndarray, dst: np.ndarray, features: np.ndarray):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        features = np.asarray(features, dtype=np.float64)
        if n < 1:
            raise ParameterError(f"node count must be >= 1, got {n}")
        if src.ndim != 1 or dst.shape != src.shape:
            raise ParameterError("src and dst must be 1-d arrays of equal length")
        m = src.shape[0]
        if features.ndim != 2 or features.shape[0] != m:
            raise ParameterError("features must be an (m, d) array")
        if m:
            if src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n:
                raise ParameterError("arc endpoint outside [0, n)")
            if np.any(src == dst):
                raise ParameterError("self-loops are not allowed")
            pairs = set(zip(src.tolist(), dst.tolist()))
            if len(pairs) != m:
                raise ParameterError("duplicate arcs are not allowed")
        if np.any(np.abs(features) > 1.0 + 1e-12):
            raise ParameterError("features must lie in [-1, 1]")

        self.n = int(n)
        self.m = int(m)
        self.d = int(features.shape[1])
        self.src = src
        self.dst = dst
        self.features = features

        self.out_adjacency = [
            np.flatnonzero(src == v).astype(np.int64) for v in range(self.n)
        ]

        for arr in (self.src, self.dst, self.features):
            arr.setflags(write=False)
        for adj in self.out_adjacency:
            adj.setflags(write=False)

    def arc(self, i: int) -> Arc:
        return Arc(int(self.src[i]), int(self.dst[i]), self.features[i])

    @property
    def arcs(self) -> Iterator[Arc]:
        for i in range(self.m):
            yield self.arc(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.features, other.features)
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, d={self.d})"


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters for one synthetic graph draw.

    Model-specific fields: ``attach`` (barabasi_albert), ``ring_degree`` and
    ``rewire_prob`` (watts_strogatz), ``edge_prob`` (erdos_renyi), ``alpha``
    (configuration, power-law exponent).  ``rewire_prob`` and ``edge_prob``
    default to 3/n when left unset.
    """

    model: str
    n: int
    feature_dim: int = 5
    feature_dist: str = "uniform_cube"
    attach: int = 4
    ring_degree: int = 5
    rewire_prob: Optional[float] = None
    edge_prob: Optional[float] = None
    alpha: float = 2.0

    @property
    def effective_rewire_prob(self) -> float:
        return 3.0 / self.n if self.rewire_prob is None else self.rewire_prob

    @property
    def effective_edge_prob(self) -> float:
        return 3.0 / self.n if self.edge_prob is None else self.edge_prob

    def validate(self) -> None:
        if self.model not in GENERATOR_MODELS:
            raise ParameterError(f"unknown graph model {self.model!r}")
        if self.n < 2:
            raise ParameterError("n must be >= 2")
        if self.feature_dim < 1:
            raise ParameterError("feature_dim must be >= 1")
        if self.feature_dist not in FEATURE_DISTS:
            raise ParameterError(f"unknown feature_dist {self.feature_dist!r}")
        if self.model == "barabasi_albert":
            if not 1 <= self.attach < self.n:
                raise ParameterError("attach must satisfy 1 <= attach < n")
        elif self.model == "watts_strogatz":
            if not 1 <= self.ring_degree < self.n:
                raise ParameterError("ring_degree must satisfy 1 <= ring_degree < n")
            if self.ring_degree % 2 == 1 and self.n % 2 == 1:
                raise ParameterError("odd ring_degree requires an even n")
            if not 0.0 <= self.effective_rewire_prob <= 1.0:
                raise ParameterError("rewire_prob must lie in [0, 1]")
        elif self.model == "erdos_renyi":
            if not 0.0 <= self.effective_edge_prob <= 1.0:
                raise ParameterError("edge_prob must lie in [0, 1]")
        elif self.model == "configuration":
            if self.alpha <= 1.0:
                raise ParameterError("alpha must be > 1")


def _edges_erdos_renyi(spec: GeneratorSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(spec.n, k=1)
    keep = rng.random(iu.shape[0]) < spec.effective_edge_prob
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _edges_barabasi_albert(spec: GeneratorSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    a = spec.attach
    edges: list[tuple[int, int]] = []
    endpoints: list[int] = []  # one entry per arc endpoint; sampling it is degree-proportional
    for u in range(a):
        for v in range(u + 1, a):
            edges.append((u, v))
            endpoints.extend((u, v))
    for v in range(a, spec.n):
        targets: set[int] = set()
        while len(targets) < a:
            if endpoints:
                t = endpoints[int(rng.integers(len(endpoints)))]
            else:
                t = int(rng.integers(v))
            targets.add(t)
        for t in sorted(targets):
            edges.append((t, v))
            endpoints.extend((t, v))
    return edges


def _edges_watts_strogatz(spec: GeneratorSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    n, k = spec.n, spec.ring_degree
    edges: list[tuple[int, int]] = []
    for off in range(1, k // 2 + 1):
        for u in range(n):
            edges.append((u, (u + off) % n))
    if k % 2 == 1:
        # Odd lattice degree: one antipodal edge per node (n is even).
        for u in range(n // 2):
            edges.append((u, u + n // 2))
    beta = spec.effective_rewire_prob
    if beta <= 0.0:
        return edges
    neighbors: dict[int, set[int]] = {u: set() for u in range(n)}
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    for idx, (u, v) in enumerate(edges):
        if rng.random() >= beta:
            continue
        if len(neighbors[u]) >= n - 1:
            continue  # u already adjacent to everyone; nothing to rewire to
        while True:
            w = int(rng.integers(n))
            if w != u and w not in neighbors[u]:
                break
        neighbors[u].discard(v)
        neighbors[v].discard(u)
        neighbors[u].add(w)
        neighbors[w].add(u)
        edges[idx] = (u, w)
    return edges


def _edges_configuration(spec: GeneratorSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = spec.n
    degrees = np.empty(n, dtype=np.int64)
    for v in range(n):
        while True:
            deg = int(rng.zipf(spec.alpha))
            if deg <= n - 1:
                degrees[v] = deg
                break
    if degrees.sum() % 2 == 1:
        bump = int(np.argmin(degrees))
        degrees[bump] += 1
    stubs = np.repeat(np.arange(n), degrees)
    rng.shuffle(stubs)
    edges: list[tuple[int, int]] = []
    present: set[frozenset[int]] = set()
    for i in range(0, len(stubs) - 1, 2):
        u, v = int(stubs[i]), int(stubs[i + 1])
        if u == v:
            continue
        key = frozenset((u, v))
        if key in present:
            continue
        present.add(key)
        edges.append((min(u, v), max(u, v)))
    return edges


_EDGE_BUILDERS = {
    "erdos_renyi": _edges_erdos_renyi,
    "barabasi_albert": _edges_barabasi_albert,
    "watts_strogatz": _edges_watts_strogatz,
    "configuration": _edges_configuration,
}


def _draw_features(dist: str, count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if dist == "uniform_cube":
        return rng.uniform(-1.0, 1.0, size=(count, d))
    if dist == "normal_clipped":
        return np.clip(rng.standard_normal((count, d)), -1.0, 1.0)
    if dist == "rademacher":
        return rng.integers(0, 2, size=(count, d)).astype(np.float64) * 2.0 - 1.0
    raise ParameterError(f"unknown feature_dist {dist!r}")


def generate_graph(spec: GeneratorSpec, rng_seed: int) -> Graph:
    """Draw a graph from ``spec``; deterministic given ``rng_seed``.

    Undirected generator output is emitted as two opposite arcs per edge,
    adjacent in the arc list and sharing one feature vector.
    """
    spec.validate()
    rng = np.random.default_rng(rng_seed)
    edges = _EDGE_BUILDERS[spec.model](spec, rng)
    feats = _draw_features(spec.feature_dist, len(edges), spec.feature_dim, rng)
    m = 2 * len(edges)
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    features = np.empty((m, spec.feature_dim), dtype=np.float64)
    for e, (u, v) in enumerate(edges):
        src[2 * e], dst[2 * e] = u, v
        src[2 * e + 1], dst[2 * e + 1] = v, u
        features[2 * e] = feats[e]
        features[2 * e + 1] = feats[e]
    return Graph(spec.n, src, dst, features)


def save_graph(graph: Graph, path) -> None:
    """Write the arc list as text: header ``# n=<n> d=<d>``, one arc per line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# n={graph.n} d={graph.d}\n")
        for i in range(graph.m):
            feats = " ".join(repr(float(x)) for x in graph.features[i])
            line = f"{graph.src[i]} {graph.dst[i]}"
            fh.write(f"{line} {feats}\n" if feats else f"{line}\n")


def load_graph(path) -> Graph:
    """Parse a graph saved by :func:`save_graph`.

    Raises ParseError naming the offending line on any schema violation.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: missing '# n=<n> d=<d>' header")
    header = lines[0][1:].split()
    try:
        fields = dict(item.split("=", 1) for item in header)
        n = int(fields["n"])
        d = int(fields["d"])
    except (ValueError, KeyError) as exc:
        raise ParseError(f"{path}: malformed header {lines[0]!r}") from exc

    srcs: list[int] = []
    dsts: list[int] = []
    feats: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 + d:
            raise ParseError(
                f"{path}:{lineno}: expected {2 + d} columns for d={d}, got {len(parts)}"
            )
        try:
            u, v = int(parts[0]), int(parts[1])
            row = [float(x) for x in parts[2:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric field") from exc
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"{path}:{lineno}: node index outside [0, {n})")
        srcs.append(u)
        dsts.append(v)
        feats.append(row)
    features = (
        np.array(feats, dtype=np.float64) if feats else np.empty((0, d), dtype=np.float64)
    )
    try:
        return Graph(n, np.array(srcs, dtype=np.int64), np.array(dsts, dtype=np.int64), features)
    except ParameterError as exc:
        raise ParseError(f"{path}: {exc}") from exc
