"""Command-line interface.

Subcommands: generate, hiro, baseline, evaluate, experiment {1|2|3|4},
fixture {ratio|improper|lipschitz}.  Exit codes: 0 success, 2 parameter
error, 3 capacity error, 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .baselines import derive_intervals, lu_greedy, random_greedy, random_seed, top_k_degree
from .errors import CapacityError, ParameterError, ParseError
from .experiments import (
    ExperimentConfig,
    config_from_sources,
    generator_spec,
    parse_config_file,
    run_experiment,
    run_pipeline,
)
from .graphs import GENERATOR_MODELS, generate_graph, load_graph, save_graph
from .hypermodel import HyperModel, sample_cover, save_cover
from .optimize import FunctionFamily, as_seed_set, evaluate
from .seeding import derive_seed
from .verify import (
    improper_gap_instance,
    lipschitz_tight_instance,
    ratio_gap_instance,
    save_probs,
)

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_CAPACITY = 3
EXIT_IO = 4


def _config_overrides(args: argparse.Namespace) -> dict:
    mapping = {
        "seed": "rng_seed",
        "out_dir": "out_dir",
        "scale": "scale",
        "workers": "workers",
        "timings": "timings",
        "n": "n",
        "d": "d",
        "l": "l",
        "epsilon_value": "epsilon_value",
        "delta": "delta",
        "T": "T",
        "trials": "trials",
        "R_train": "R_train",
        "R_eval": "R_eval",
        "link": "link",
        "graph_path": "graph_path",
    }
    overrides = {}
    for arg_name, field in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "k_list", None):
        overrides["k_list"] = tuple(args.k_list)
    if getattr(args, "models", None):
        overrides["graph_models"] = tuple(args.models)
    return overrides


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values = parse_config_file(args.config) if getattr(args, "config", None) else None
    return config_from_sources(file_values, _config_overrides(args))


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, help="root RNG seed")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")
    parser.add_argument("--scale", choices=["desk", "paper"], help="size preset")
    parser.add_argument("--workers", type=int, help="parallel trial workers")
    parser.add_argument("--timings", action="store_true", default=None,
                        help="record wall-clock times in the CSV")
    parser.add_argument("--n", type=int, help="node count")
    parser.add_argument("--d", type=int, help="feature dimension")
    parser.add_argument("--l", type=int, help="training cover size")
    parser.add_argument("--epsilon-value", dest="epsilon_value", type=float,
                        help="derive the cover size from this value accuracy instead of --l")
    parser.add_argument("--delta", type=float, help="cover failure probability")
    parser.add_argument("--T", type=int, help="optimizer iterations")
    parser.add_argument("--trials", type=int, help="experiment trials")
    parser.add_argument("--R-train", dest="R_train", type=int, help="optimization pool size")
    parser.add_argument("--R-eval", dest="R_eval", type=int, help="evaluation pool size")
    parser.add_argument("--link", choices=["linear", "logistic", "probit"])
    parser.add_argument("--k-list", dest="k_list", type=int, nargs="+", help="budgets")
    parser.add_argument("--models", nargs="+", choices=GENERATOR_MODELS)
    parser.add_argument("--graph", dest="graph_path", help="edge-list file to load")


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    spec = generator_spec(config, args.model)
    overrides = {
        name: getattr(args, name)
        for name in ("attach", "ring_degree", "rewire_prob", "edge_prob", "alpha", "feature_dist")
        if getattr(args, name, None) is not None
    }
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    graph = generate_graph(spec, config.rng_seed)
    save_graph(graph, args.out)
    print(f"wrote {args.out}: n={graph.n} m={graph.m} d={graph.d}")
    return EXIT_OK


def _cmd_hiro(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows, diagnostics = run_pipeline(config)
    for row in rows:
        print(
            f"{row.algorithm:>14}  k={row.k:<4} min_value={row.min_value:.6g} "
            f"stderr={row.stderr:.6g}"
        )
    if args.draw:
        rng = np.random.default_rng(derive_seed(config.rng_seed, 99))
        pick = int(rng.integers(len(diagnostics.rounds)))
        chosen = diagnostics.rounds[pick].seed_set
        print(f"drawn set (round {pick + 1}): {' '.join(map(str, chosen))}")
    print(f"results in {config.out_dir}")
    return EXIT_OK


def _cmd_baseline(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if config.graph_path is not None:
        graph = load_graph(config.graph_path)
    else:
        graph = generate_graph(generator_spec(config, config.graph_models[0]),
                               derive_seed(config.rng_seed, 5, 0, 0, 0))
    model = HyperModel(config.link, config.B, config.d)
    rng = np.random.default_rng(derive_seed(config.rng_seed, 5, 0, 0, 1))
    thetas = rng.uniform(-config.B, config.B, size=(config.l, config.d))
    family = FunctionFamily.from_model(
        graph, model, thetas, config.R_train, derive_seed(config.rng_seed, 5, 0, 0, 2)
    )
    k = config.k_list[0]
    name = args.name
    if name == "random":
        sets = random_seed(graph, k, config.random_trials, derive_seed(config.rng_seed, 6))
        reports = [evaluate(family, s, config.R_eval, config.rng_seed) for s in sets[:5]]
        mean = float(np.mean([r.min_value for r in reports]))
        print(f"random baseline (first 5 of {len(sets)} draws): mean min_value={mean:.6g}")
        return EXIT_OK
    if name == "degree":
        chosen = top_k_degree(graph, k)
    elif name == "random-greedy":
        chosen = random_greedy(family, k, derive_seed(config.rng_seed, 7))
    elif name == "lu-greedy":
        bounds = derive_intervals(family)
        chosen = lu_greedy(graph, bounds, k, config.R_train, derive_seed(config.rng_seed, 8))
    else:
        raise ParameterError(f"unknown baseline {name!r}")
    report = evaluate(family, chosen, config.R_eval, config.rng_seed)
    print(f"{name}: set={' '.join(map(str, chosen))}")
    print(f"min_value={report.min_value:.6g} (function {report.argmin_index})")
    return EXIT_OK


def _load_sets(path) -> list[tuple[int, ...]]:
    sets = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                sets.append(as_seed_set(int(x) for x in stripped.split()))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-integer node id") from exc
    if not sets:
        raise ParseError(f"{path}: no seed sets found")
    return sets


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if config.graph_path is None:
        raise ParameterError("evaluate requires --graph")
    graph = load_graph(config.graph_path)
    from .hypermodel import load_cover

    cover = load_cover(args.cover)
    model = HyperModel(config.link, cover.B, cover.d)
    family = FunctionFamily.from_model(
        graph, model, cover.thetas, 1, config.rng_seed, build_index=False
    )
    sets = _load_sets(args.sets)
    if len(sets) > 1:
        from .optimize import MixedStrategy

        target = MixedStrategy(seed_sets=tuple(sets))
    else:
        target = sets[0]
    report = evaluate(family, target, config.R_eval, config.rng_seed, exact=args.exact)
    for i, (v, s) in enumerate(zip(report.per_function_values, report.per_function_stderr)):
        print(f"function {i}: value={v:.6g} stderr={s:.6g}")
    print(f"min_value={report.min_value:.6g} at function {report.argmin_index}")
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows = run_experiment(args.number, config)
    print(f"experiment {args.number}: {len(rows)} rows -> {config.out_dir}")
    return EXIT_OK


def _cmd_fixture(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.kind == "ratio":
        fixture = ratio_gap_instance(args.n_leaves)
    elif args.kind == "improper":
        fixture = improper_gap_instance(args.n_leaves)
    else:
        n = args.n
        lam = args.lam if args.lam is not None else 1.0 / (n * n)
        fixture = lipschitz_tight_instance(n, lam)
    os.makedirs(config.out_dir, exist_ok=True)
    graph_path = os.path.join(config.out_dir, f"fixture_{args.kind}_graph.txt")
    probs_path = os.path.join(config.out_dir, f"fixture_{args.kind}_probs.txt")
    save_graph(fixture.graph, graph_path)
    save_probs(fixture.probs, probs_path)
    labels = " ".join(f"{k}={v}" for k, v in sorted(fixture.labels.items()))
    print(f"wrote {graph_path} and {probs_path}; labeled nodes: {labels}")
    return EXIT_OK


def _cmd_cover(args: argparse.Namespace) -> int:
    config = _load_config(args)
    model = HyperModel(config.link, config.B, config.d)
    cover = sample_cover(
        model,
        args.epsilon_theta,
        config.delta,
        config.rng_seed,
        s_override=args.s_override,
    )
    save_cover(cover, args.out)
    print(f"wrote {args.out}: s={cover.s} d={cover.d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustim",
        description="Robust influence maximization toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a synthetic graph")
    _add_shared_flags(p_gen)
    p_gen.add_argument("--model", required=True, choices=GENERATOR_MODELS)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--attach", type=int)
    p_gen.add_argument("--ring-degree", dest="ring_degree", type=int)
    p_gen.add_argument("--rewire-prob", dest="rewire_prob", type=float)
    p_gen.add_argument("--edge-prob", dest="edge_prob", type=float)
    p_gen.add_argument("--alpha", type=float)
    p_gen.add_argument("--feature-dist", dest="feature_dist",
                       choices=["uniform_cube", "normal_clipped", "rademacher"])
    p_gen.set_defaults(func=_cmd_generate)

    p_hiro = sub.add_parser("hiro", help="full pipeline: optimize and evaluate vs baselines")
    _add_shared_flags(p_hiro)
    p_hiro.add_argument("--draw", action="store_true",
                        help="also sample one set uniformly from the mixture")
    p_hiro.set_defaults(func=_cmd_hiro)

    p_base = sub.add_parser("baseline", help="run one benchmark algorithm")
    _add_shared_flags(p_base)
    p_base.add_argument("--name", required=True,
                        choices=["random", "degree", "random-greedy", "lu-greedy"])
    p_base.set_defaults(func=_cmd_baseline)

    p_eval = sub.add_parser("evaluate", help="score seed sets against a cover")
    _add_shared_flags(p_eval)
    p_eval.add_argument("--cover", required=True, help="cover file (one theta per line)")
    p_eval.add_argument("--sets", required=True, help="file with one seed set per line")
    p_eval.add_argument("--exact", action="store_true")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_exp = sub.add_parser("experiment", help="run one experiment sweep")
    _add_shared_flags(p_exp)
    p_exp.add_argument("number", type=int, choices=[1, 2, 3, 4])
    p_exp.set_defaults(func=_cmd_experiment)

    p_fix = sub.add_parser("fixture", help="export a constructed worst-case instance")
    _add_shared_flags(p_fix)
    p_fix.add_argument("kind", choices=["ratio", "improper", "lipschitz"])
    p_fix.add_argument("--n-leaves", dest="n_leaves", type=int, default=100)
    p_fix.add_argument("--fixture-n", dest="n", type=int, default=50)
    p_fix.add_argument("--lam", type=float)
    p_fix.set_defaults(func=_cmd_fixture)

    p_cov = sub.add_parser("cover", help="sample and save a hyperparameter cover")
    _add_shared_flags(p_cov)
    p_cov.add_argument("--epsilon-theta", dest="epsilon_theta", type=float, required=True)
    p_cov.add_argument("--s-override", dest="s_override", type=int)
    p_cov.add_argument("--out", required=True)
    p_cov.set_defaults(func=_cmd_cover)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ParseError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
