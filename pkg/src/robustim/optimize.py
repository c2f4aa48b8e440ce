"""Robust seed selection over a finite family of influence functions.

The solver alternates multiplicative weight updates over the functions with a
lazy greedy best response on the weighted objective, and returns the uniform
mixture over the per-round seed sets.  Deduplicating that mixture into one
larger set gives the budget-augmented single-set output.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .cascade import SamplePool, build_pool, exact_influence
from .errors import ParameterError
from .graphs import Graph
from .hypermodel import HyperModel, edge_probabilities
from .seeding import derive_seed

SeedSet = tuple[int, ...]

#: Upper bound on how far a greedy-denominator ratio can exceed the true one.
GREEDY_RATIO_OVERESTIMATE = math.e / (math.e - 1.0)


def as_seed_set(nodes: Iterable[int]) -> SeedSet:
    return tuple(sorted({int(v) for v in nodes}))


@dataclass(eq=False)
class FunctionFamily:
    """A graph plus one sample pool (and probability vector) per function."""

    graph: Graph
    probs: list[np.ndarray]
    pools: list[SamplePool]
    model: Optional[HyperModel] = None
    thetas: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.pools:
            raise ParameterError("family needs at least one function")
        if len(self.probs) != len(self.pools):
            raise ParameterError("probs and pools must align")
        for pool in self.pools:
            if pool.graph is not self.graph and pool.graph != self.graph:
                raise ParameterError("all pools must share the family graph")

    @property
    def l(self) -> int:
        return len(self.pools)

    def pool_values(self, S: Iterable[int]) -> np.ndarray:
        """Sample-average influence of S under every function."""
        seeds = as_seed_set(S)
        return np.array(
            [pool.counts(seeds).sum() / pool.R for pool in self.pools], dtype=np.float64
        )

    def build_index(self) -> None:
        for pool in self.pools:
            pool.ensure_index()

    @classmethod
    def from_model(
        cls,
        graph: Graph,
        model: HyperModel,
        thetas: np.ndarray,
        R: int,
        rng_seed: int,
        build_index: bool = True,
    ) -> "FunctionFamily":
        thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        probs = [edge_probabilities(model, theta, graph) for theta in thetas]
        pools = [
            build_pool(graph, p, R, derive_seed(rng_seed, i)) for i, p in enumerate(probs)
        ]
        fam = cls(graph=graph, probs=probs, pools=pools, model=model, thetas=thetas)
        if build_index:
            fam.build_index()
        return fam

    @classmethod
    def from_probs(
        cls,
        graph: Graph,
        probs: Sequence[np.ndarray],
        R: int,
        rng_seed: int,
        build_index: bool = True,
    ) -> "FunctionFamily":
        probs = [np.asarray(p, dtype=np.float64) for p in probs]
        pools = [
            build_pool(graph, p, R, derive_seed(rng_seed, i)) for i, p in enumerate(probs)
        ]
        fam = cls(graph=graph, probs=probs, pools=pools)
        if build_index:
            fam.build_index()
        return fam


def _check_weights(family: FunctionFamily, weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (family.l,):
        raise ParameterError(f"weights have shape {weights.shape}, expected ({family.l},)")
    if np.any(weights < 0):
        raise ParameterError("weights must be nonnegative")
    return weights


def greedy_order(
    family: FunctionFamily,
    weights: np.ndarray,
    k: int,
    candidates: Optional[Sequence[int]] = None,
) -> list[int]:
    """Nodes in greedy pick order for the weighted pool objective.

    Lazy evaluation: stale marginal gains sit in a max-heap keyed by
    (gain, node id) and are recomputed only when they surface, which by
    submodularity of per-pool reachability counts reproduces the plain greedy
    selection exactly, lowest node id winning ties.
    """
    graph = family.graph
    weights = _check_weights(family, weights)
    if candidates is None:
        cands = np.arange(graph.n)
    else:
        cands = np.unique(np.asarray(list(candidates), dtype=np.int64))
        if cands.size and (cands[0] < 0 or cands[-1] >= graph.n):
            raise ParameterError("candidate outside [0, n)")
    if not 1 <= k <= cands.size:
        raise ParameterError(f"k={k} must lie in [1, {cands.size}]")
    family.build_index()

    nbytes = (graph.n + 7) // 8
    covered = [np.zeros((pool.R, nbytes), dtype=np.uint8) for pool in family.pools]
    covered_total = [0] * family.l

    def gains(members: np.ndarray) -> np.ndarray:
        out = np.zeros(members.size, dtype=np.float64)
        for i, pool in enumerate(family.pools):
            if weights[i] == 0.0:
                continue
            merged = pool.reach_index[:, members, :] | covered[i][:, None, :]
            pops = np.bitwise_count(merged).sum(axis=(0, 2), dtype=np.int64)
            out += weights[i] * (pops - covered_total[i]) / pool.R
        return out

    heap: list[tuple[float, int, int]] = [
        (-g, int(v), 0) for v, g in zip(cands, gains(cands))
    ]
    heapq.heapify(heap)
    order: list[int] = []
    while len(order) < k:
        neg_gain, v, computed_at = heapq.heappop(heap)
        if computed_at == len(order):
            for i, pool in enumerate(family.pools):
                covered[i] |= pool.reach_index[:, v, :]
                covered_total[i] = int(_total_bits(covered[i]))
            order.append(v)
        else:
            fresh = gains(np.array([v]))[0]
            heapq.heappush(heap, (-fresh, v, len(order)))
    return order


def _total_bits(packed: np.ndarray) -> int:
    return int(np.bitwise_count(packed).sum(dtype=np.int64))


def lazy_greedy(
    family: FunctionFamily,
    weights: np.ndarray,
    k: int,
    candidates: Optional[Sequence[int]] = None,
) -> SeedSet:
    """Size-k set maximizing the weighted pool objective greedily."""
    return as_seed_set(greedy_order(family, weights, k, candidates))


def mwu_weights(
    history: Sequence[np.ndarray], eta: float, l: Optional[int] = None
) -> np.ndarray:
    """Weights proportional to exp(-eta * cumulative payoff) per function.

    ``history`` holds one payoff vector per completed round, entries
    normalized to [0, 1].  ``l`` is required when the history is empty.
    """
    if eta < 0:
        raise ParameterError("eta must be >= 0")
    if not history:
        if l is None or l < 1:
            raise ParameterError("l must be given (>= 1) when history is empty")
        return np.full(l, 1.0 / l)
    hist = np.asarray(history, dtype=np.float64)
    if hist.ndim != 2:
        raise ParameterError("history must be a list of equal-length payoff vectors")
    if l is not None and hist.shape[1] != l:
        raise ParameterError(f"payoff vectors have length {hist.shape[1]}, expected {l}")
    if hist.min() < -1e-9 or hist.max() > 1.0 + 1e-9:
        raise ParameterError("payoffs must be normalized to [0, 1]")
    scores = -eta * hist.sum(axis=0)
    scores -= scores.max()
    w = np.exp(scores)
    return w / w.sum()


@dataclass(frozen=True)
class MixedStrategy:
    """Uniform distribution over equally sized seed sets."""

    seed_sets: tuple[SeedSet, ...]

    def __post_init__(self):
        if not self.seed_sets:
            raise ParameterError("a mixed strategy needs at least one set")
        sizes = {len(s) for s in self.seed_sets}
        if len(sizes) != 1:
            raise ParameterError("all seed sets must share one size")

    @property
    def k(self) -> int:
        return len(self.seed_sets[0])

    @property
    def T(self) -> int:
        return len(self.seed_sets)


@dataclass(frozen=True)
class HiroConfig:
    """Run parameters for the robust optimizer."""

    k: int
    T: int = 10
    eta: Optional[float] = None
    l: Optional[int] = None
    R: int = 1000
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.T < 1:
            raise ParameterError("T must be >= 1")
        if self.eta is not None and self.eta <= 0:
            raise ParameterError("eta override must be > 0")
        if self.R < 1:
            raise ParameterError("R must be >= 1")


@dataclass(frozen=True)
class HiroRound:
    index: int
    weights: np.ndarray
    seed_set: SeedSet
    payoffs: np.ndarray  # raw pool means, one per function
    running_min: float


@dataclass
class HiroDiagnostics:
    eta: float
    rounds: list[HiroRound] = field(default_factory=list)

    @property
    def min_value_trajectory(self) -> list[float]:
        return [r.running_min for r in self.rounds]

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("round,weights,seed_set,payoffs,running_min\n")
            for r in self.rounds:
                weights = " ".join(format(w, ".6g") for w in r.weights)
                seeds = " ".join(str(v) for v in r.seed_set)
                payoffs = " ".join(format(p, ".6g") for p in r.payoffs)
                fh.write(f"{r.index},{weights},{seeds},{payoffs},{format(r.running_min, '.6g')}\n")


def default_learning_rate(l: int, T: int) -> float:
    return math.log(l) / (2.0 * T) if l > 1 else 0.0


def hiro(family: FunctionFamily, config: HiroConfig) -> tuple[MixedStrategy, HiroDiagnostics]:
    """Multiplicative-weights / greedy best-response loop.

    Each round reweights the functions against their cumulative normalized
    payoffs, runs the lazy greedy on the weighted objective, and records the
    chosen set.  Returns all T sets as a uniform mixture plus per-round
    diagnostics (weights, payoff matrix, running worst-case value of the
    growing mixture).
    """
    if config.l is not None and config.l != family.l:
        raise ParameterError(f"config.l={config.l} does not match family size {family.l}")
    l = family.l
    n = family.graph.n
    eta = config.eta if config.eta is not None else default_learning_rate(l, config.T)
    history: list[np.ndarray] = []
    diagnostics = HiroDiagnostics(eta=eta)
    sets: list[SeedSet] = []
    cumulative = np.zeros(l, dtype=np.float64)
    for t in range(1, config.T + 1):
        weights = mwu_weights(history, eta, l)
        chosen = lazy_greedy(family, weights, config.k)
        payoffs = family.pool_values(chosen)
        history.append(payoffs / n)
        cumulative += payoffs
        running_min = float((cumulative / t).min())
        sets.append(chosen)
        diagnostics.rounds.append(
            HiroRound(
                index=t,
                weights=weights,
                seed_set=chosen,
                payoffs=payoffs,
                running_min=running_min,
            )
        )
    return MixedStrategy(seed_sets=tuple(sets)), diagnostics


class UnionResult(NamedTuple):
    nodes: SeedSet
    size: int
    blowup: float


def bicriteria_union(strategy: MixedStrategy) -> UnionResult:
    """Deduplicated union of the mixture's sets, with its budget blow-up
    factor |union| / k."""
    merged = as_seed_set(v for s in strategy.seed_sets for v in s)
    return UnionResult(nodes=merged, size=len(merged), blowup=len(merged) / strategy.k)


@dataclass(frozen=True)
class RobustReport:
    """Per-function values of one candidate solution and their minimum."""

    per_function_values: np.ndarray
    min_value: float
    argmin_index: int
    per_function_stderr: np.ndarray
    replicates: int
    rng_seed: Optional[int]
    exact: bool
    robust_ratio: Optional[float] = None


Target = Union[MixedStrategy, Iterable[int]]


def _target_sets(target: Target) -> list[SeedSet]:
    if isinstance(target, MixedStrategy):
        return list(target.seed_sets)
    return [as_seed_set(target)]


def _report_from_values(values: np.ndarray, stderr: np.ndarray, replicates: int,
                        rng_seed: Optional[int], exact: bool) -> RobustReport:
    argmin = int(np.argmin(values))
    return RobustReport(
        per_function_values=values,
        min_value=float(values[argmin]),
        argmin_index=argmin,
        per_function_stderr=stderr,
        replicates=replicates,
        rng_seed=rng_seed,
        exact=exact,
    )


def values_on_pools(pools: Sequence[SamplePool], target: Target) -> tuple[np.ndarray, np.ndarray]:
    """Per-function (value, stderr) of a set or mixture on given pools.

    A mixture is scored per function as the average over its sets; the
    standard error comes from per-sample averages, so shared samples across
    sets are accounted for.
    """
    sets = _target_sets(target)
    values = np.empty(len(pools), dtype=np.float64)
    stderrs = np.empty(len(pools), dtype=np.float64)
    for i, pool in enumerate(pools):
        per_sample = np.zeros(pool.R, dtype=np.float64)
        for s in sets:
            per_sample += pool.counts(s)
        per_sample /= len(sets)
        values[i] = float(per_sample.mean())
        stderrs[i] = (
            float(np.std(per_sample, ddof=1)) / float(np.sqrt(pool.R)) if pool.R > 1 else 0.0
        )
    return values, stderrs


def evaluate(
    family: FunctionFamily,
    target: Target,
    high_R: int = 10_000,
    rng_seed: int = 0,
    exact: bool = False,
) -> RobustReport:
    """Score a set or mixture on fresh pools (or exactly).

    Fresh pools are independent of any pools used during optimization, so the
    report is free of adaptivity bias; pool size and seed are recorded.
    """
    sets = _target_sets(target)
    if exact:
        values = np.array(
            [
                float(np.mean([exact_influence(family.graph, p, s) for s in sets]))
                for p in family.probs
            ],
            dtype=np.float64,
        )
        return _report_from_values(
            values, np.zeros(family.l), replicates=0, rng_seed=None, exact=True
        )
    if high_R < 1:
        raise ParameterError("high_R must be >= 1")
    pools = [
        build_pool(family.graph, p, high_R, derive_seed(rng_seed, 1_000_003, i))
        for i, p in enumerate(family.probs)
    ]
    values, stderrs = values_on_pools(pools, target)
    return _report_from_values(values, stderrs, replicates=high_R, rng_seed=rng_seed, exact=False)


def evaluate_on(family: FunctionFamily, target: Target) -> RobustReport:
    """Score a set or mixture on the family's existing pools (no fresh draws).

    Used by the experiment harness, which builds one evaluation family per
    trial and scores every algorithm on it.
    """
    values, stderrs = values_on_pools(family.pools, target)
    return _report_from_values(
        values,
        stderrs,
        replicates=family.pools[0].R,
        rng_seed=family.pools[0].rng_seed,
        exact=False,
    )


def per_function_optima(
    family: FunctionFamily, k: int, mode: str = "brute_force"
) -> list[float]:
    """Best attainable value of each function alone at budget k.

    ``brute_force`` enumerates exactly; ``greedy`` uses the lazy greedy on the
    function's own pool, which underestimates the optimum by at most 1 - 1/e.
    """
    if mode == "brute_force":
        from .verify import brute_force_robust

        out = []
        for p in family.probs:
            _, value = brute_force_robust(family.graph, [p], k)
            out.append(value)
        return out
    if mode == "greedy":
        out = []
        for i in range(family.l):
            one_hot = np.zeros(family.l)
            one_hot[i] = 1.0
            best = lazy_greedy(family, one_hot, k)
            out.append(float(family.pool_values(best)[i]))
        return out
    raise ParameterError("mode must be 'greedy' or 'brute_force'")


def robust_ratio(
    family: FunctionFamily,
    S: Iterable[int],
    k: int,
    mode: str = "brute_force",
    optima: Optional[Sequence[float]] = None,
) -> float:
    """min over functions of value(S) / best-value-at-budget-k.

    In greedy mode both numerator and denominator are pool values and the
    result can exceed the true ratio by at most ``GREEDY_RATIO_OVERESTIMATE``.
    In brute_force mode both sides are exact.
    """
    seeds = as_seed_set(S)
    if optima is None:
        optima = per_function_optima(family, k, mode)
    if len(optima) != family.l:
        raise ParameterError("optima length must match the family size")
    if mode == "brute_force":
        numerators = np.array(
            [exact_influence(family.graph, p, seeds) for p in family.probs]
        )
    elif mode == "greedy":
        numerators = family.pool_values(seeds)
    else:
        raise ParameterError("mode must be 'greedy' or 'brute_force'")
    return float(np.min(numerators / np.asarray(optima, dtype=np.float64)))
