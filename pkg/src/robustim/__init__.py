"""Robust influence maximization for feature-parameterized cascade models."""

__version__ = "0.1.0"

from .baselines import (
    IntervalBounds,
    derive_intervals,
    lu_greedy,
    random_greedy,
    random_seed,
    top_k_degree,
)
from .cascade import (
    InfluenceEstimate,
    SamplePool,
    build_pool,
    estimate_influence,
    exact_influence,
    pool_influence,
    simulate_cascade,
)
from .errors import CapacityError, ParameterError, ParseError
from .graphs import (
    Arc,
    GeneratorSpec,
    Graph,
    generate_graph,
    load_graph,
    save_graph,
)
from .hypermodel import (
    Cover,
    HyperModel,
    cover_sample_count,
    edge_probabilities,
    function_cover_radius,
    lipschitz_bound,
    load_cover,
    sample_cover,
    save_cover,
)
from .optimize import (
    FunctionFamily,
    HiroConfig,
    HiroDiagnostics,
    MixedStrategy,
    RobustReport,
    bicriteria_union,
    evaluate,
    evaluate_on,
    hiro,
    lazy_greedy,
    mwu_weights,
    robust_ratio,
)
from .verify import (
    Fixture,
    brute_force_robust,
    improper_gap_instance,
    lipschitz_tight_instance,
    ratio_gap_instance,
)

__all__ = [
    "__version__",
    "Arc",
    "CapacityError",
    "Cover",
    "Fixture",
    "FunctionFamily",
    "GeneratorSpec",
    "Graph",
    "HiroConfig",
    "HiroDiagnostics",
    "HyperModel",
    "InfluenceEstimate",
    "IntervalBounds",
    "MixedStrategy",
    "ParameterError",
    "ParseError",
    "RobustReport",
    "SamplePool",
    "bicriteria_union",
    "brute_force_robust",
    "build_pool",
    "cover_sample_count",
    "derive_intervals",
    "edge_probabilities",
    "estimate_influence",
    "evaluate",
    "evaluate_on",
    "exact_influence",
    "function_cover_radius",
    "generate_graph",
    "hiro",
    "improper_gap_instance",
    "lazy_greedy",
    "lipschitz_bound",
    "lipschitz_tight_instance",
    "load_cover",
    "load_graph",
    "lu_greedy",
    "mwu_weights",
    "pool_influence",
    "random_greedy",
    "random_seed",
    "ratio_gap_instance",
    "robust_ratio",
    "sample_cover",
    "save_cover",
    "save_graph",
    "simulate_cascade",
    "top_k_degree",
]
