"""Deterministic experiment runners and CSV reporting.

Every stochastic choice is keyed to the run's root seed plus a fixed integer
path (experiment, model index, trial, stage), so trials can run on any number
of workers and still produce byte-identical, sorted CSV output.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from multiprocessing import get_context
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__ as _version
from .baselines import derive_intervals, random_seed, top_k_degree
from .cascade import build_pool
from .errors import ParameterError, ParseError
from .graphs import GENERATOR_MODELS, GeneratorSpec, Graph, generate_graph, load_graph
from .hypermodel import HyperModel, cover_sample_count, function_cover_radius
from .optimize import (
    FunctionFamily,
    HiroConfig,
    HiroDiagnostics,
    bicriteria_union,
    evaluate_on,
    greedy_order,
    hiro,
    lazy_greedy,
)
from .seeding import derive_seed

RESULT_COLUMNS = (
    "experiment",
    "trial",
    "graph_model",
    "k",
    "l",
    "T",
    "algorithm",
    "min_value",
    "stderr",
    "wall_time_ms",
)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    trial: int
    graph_model: str
    k: int
    l: int
    T: int
    algorithm: str
    min_value: float
    stderr: float
    wall_time_ms: float


def _row_key(row: ResultRow):
    return (
        row.experiment,
        row.trial,
        row.graph_model,
        row.k,
        row.l,
        row.T,
        row.algorithm,
    )


def write_results_csv(rows: Sequence[ResultRow], path) -> None:
    """Fixed header, 6 significant digits, rows sorted by grid point."""
    ordered = sorted(rows, key=_row_key)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in ordered:
            fh.write(
                f"{r.experiment},{r.trial},{r.graph_model},{r.k},{r.l},{r.T},"
                f"{r.algorithm},{format(r.min_value, '.6g')},"
                f"{format(r.stderr, '.6g')},{format(r.wall_time_ms, '.6g')}\n"
            )


@dataclass
class ExperimentConfig:
    """Everything a run needs; serializable as line-oriented key=value text."""

    graph_models: tuple[str, ...] = GENERATOR_MODELS
    graph_path: Optional[str] = None
    n: int = 500
    d: int = 5
    link: str = "logistic"
    B: float = 1.0
    feature_dist: str = "uniform_cube"
    attach: int = 4
    ring_degree: int = 5
    rewire_prob: Optional[float] = None
    edge_prob: Optional[float] = None
    alpha: float = 2.0
    l: int = 20
    epsilon_value: Optional[float] = None  # when set, derives l from the cover bound
    delta: float = 0.1
    T: int = 10
    k_list: tuple[int, ...] = (10, 25, 50)
    R_train: int = 1000
    R_eval: int = 10000
    trials: int = 50
    random_trials: int = 100
    rng_seed: int = 0
    out_dir: str = "results"
    scale: str = "paper"
    workers: int = 1
    timings: bool = False
    exp1_r_grid: tuple[int, ...] = (1, 10, 20, 30, 40, 50)
    exp1_validation_l: int = 50
    exp2_T_grid: tuple[int, ...] = (1, 5, 10, 15)
    exp4_k: int = 10
    exp4_beta_grid: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)

    def validate(self) -> None:
        for name in self.graph_models:
            if name not in GENERATOR_MODELS:
                raise ParameterError(f"unknown graph model {name!r}")
        if self.scale not in ("desk", "paper"):
            raise ParameterError("scale must be 'desk' or 'paper'")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        if not self.k_list:
            raise ParameterError("k_list must be nonempty")
        if min(self.k_list) < 1:
            raise ParameterError("every k must be >= 1")
        if self.l < 1 or self.T < 1 or self.trials < 1:
            raise ParameterError("l, T and trials must be >= 1")
        if self.epsilon_value is not None and self.epsilon_value <= 0:
            raise ParameterError("epsilon_value must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.R_train < 1 or self.R_eval < 1:
            raise ParameterError("pool sizes must be >= 1")
        if max(self.exp1_r_grid) < 1:
            raise ParameterError("exp1_r_grid must contain positive counts")


DESK_PRESET = {"n": 100, "R_train": 1000, "R_eval": 1000, "trials": 10}
PAPER_PRESET = {"n": 500, "R_train": 1000, "R_eval": 10000, "trials": 50}


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"expected a boolean, got {raw!r}")


def _parse_opt_float(raw: str) -> Optional[float]:
    return None if raw.strip() == "" else float(raw)


def _parse_opt_str(raw: str) -> Optional[str]:
    return None if raw.strip() == "" else raw.strip()


def _parse_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _parse_str_tuple(raw: str) -> tuple[str, ...]:
    return tuple(x for x in raw.replace(",", " ").split())


_FIELD_PARSERS: dict[str, Callable[[str], object]] = {
    "graph_models": _parse_str_tuple,
    "graph_path": _parse_opt_str,
    "n": int,
    "d": int,
    "link": str.strip,
    "B": float,
    "feature_dist": str.strip,
    "attach": int,
    "ring_degree": int,
    "rewire_prob": _parse_opt_float,
    "edge_prob": _parse_opt_float,
    "alpha": float,
    "l": int,
    "epsilon_value": _parse_opt_float,
    "delta": float,
    "T": int,
    "k_list": _parse_int_tuple,
    "R_train": int,
    "R_eval": int,
    "trials": int,
    "random_trials": int,
    "rng_seed": int,
    "out_dir": str.strip,
    "scale": str.strip,
    "workers": int,
    "timings": _parse_bool,
    "exp1_r_grid": _parse_int_tuple,
    "exp1_validation_l": int,
    "exp2_T_grid": _parse_int_tuple,
    "exp4_k": int,
    "exp4_beta_grid": _parse_float_tuple,
}


def parse_config_file(path) -> dict[str, str]:
    """Line-oriented key=value text; blank lines and '#' comments ignored."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ParseError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, value = stripped.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def config_from_sources(
    file_values: Optional[dict[str, str]] = None,
    overrides: Optional[dict[str, object]] = None,
) -> ExperimentConfig:
    """Defaults, then the scale preset, then config-file values, then explicit
    overrides (CLI flags)."""
    file_values = dict(file_values or {})
    overrides = dict(overrides or {})
    scale = overrides.get("scale") or file_values.get("scale") or "paper"
    config = ExperimentConfig()
    preset = DESK_PRESET if scale == "desk" else PAPER_PRESET
    config = replace(config, scale=str(scale), **preset)
    parsed: dict[str, object] = {}
    for key, raw in file_values.items():
        if key not in _FIELD_PARSERS:
            raise ParseError(f"unknown config key {key!r}")
        if key == "scale":
            continue
        try:
            parsed[key] = _FIELD_PARSERS[key](raw)
        except ValueError as exc:
            raise ParseError(f"config key {key!r}: {exc}") from exc
    config = replace(config, **parsed)
    overrides.pop("scale", None)
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    config.validate()
    return config


def write_manifest(config: ExperimentConfig, path, command: str) -> None:
    """All rerun-relevant parameters; the file is itself a valid --config."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# command={command}\n")
        fh.write(f"# version={_version}\n")
        for f in fields(config):
            value = getattr(config, f.name)
            if value is None:
                text = ""
            elif isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = str(value)
            fh.write(f"{f.name}={text}\n")


def generator_spec(config: ExperimentConfig, model_name: str) -> GeneratorSpec:
    return GeneratorSpec(
        model=model_name,
        n=config.n,
        feature_dim=config.d,
        feature_dist=config.feature_dist,
        attach=config.attach,
        ring_degree=config.ring_degree,
        rewire_prob=config.rewire_prob,
        edge_prob=config.edge_prob,
        alpha=config.alpha,
    )


class _Stopwatch:
    """Millisecond timer that reads 0 when timing is disabled, keeping output
    byte-stable across reruns."""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._t0 = 0.0

    def start(self) -> None:
        if self.enabled:
            self._t0 = time.perf_counter()

    def stop(self) -> float:
        if not self.enabled:
            return 0.0
        return (time.perf_counter() - self._t0) * 1000.0


def _trial_graph(config: ExperimentConfig, exp: int, model_name: str, mi: int, trial: int) -> Graph:
    if config.graph_path is not None:
        return load_graph(config.graph_path)
    spec = generator_spec(config, model_name)
    return generate_graph(spec, derive_seed(config.rng_seed, exp, mi, trial, 0))


def _sample_thetas(
    config: ExperimentConfig, count: int, exp: int, mi: int, trial: int, stage: int
) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(config.rng_seed, exp, mi, trial, stage))
    return rng.uniform(-config.B, config.B, size=(count, config.d))


def resolve_cover_size(config: ExperimentConfig, graph: Graph) -> int:
    """Training cover size: config.l, or the sampling bound for the requested
    value accuracy when epsilon_value is set."""
    if config.epsilon_value is None:
        return config.l
    model = HyperModel(config.link, config.B, config.d)
    radius = function_cover_radius(config.epsilon_value, graph)
    return cover_sample_count(model, radius, config.delta)


def _families(
    config: ExperimentConfig, graph: Graph, exp: int, mi: int, trial: int
) -> tuple[FunctionFamily, FunctionFamily]:
    """Training and evaluation families over one sampled cover; the evaluation
    pools are fresh draws so reported values carry no optimizer bias."""
    model = HyperModel(config.link, config.B, config.d)
    thetas = _sample_thetas(config, resolve_cover_size(config, graph), exp, mi, trial, 1)
    train = FunctionFamily.from_model(
        graph, model, thetas, config.R_train, derive_seed(config.rng_seed, exp, mi, trial, 2)
    )
    evaluation = FunctionFamily.from_model(
        graph, model, thetas, config.R_eval, derive_seed(config.rng_seed, exp, mi, trial, 3)
    )
    return train, evaluation


def _argmin_stderr(report) -> float:
    return float(report.per_function_stderr[report.argmin_index])


def _exp1_trial(config: ExperimentConfig, model_name: str, mi: int, trial: int) -> list[ResultRow]:
    exp = 1
    graph = _trial_graph(config, exp, model_name, mi, trial)
    model = HyperModel(config.link, config.B, config.d)
    val_thetas = _sample_thetas(config, config.exp1_validation_l, exp, mi, trial, 1)
    val_family = FunctionFamily.from_model(
        graph, model, val_thetas, config.R_eval, derive_seed(config.rng_seed, exp, mi, trial, 2)
    )
    max_r = max(config.exp1_r_grid)
    train_thetas = _sample_thetas(config, max_r, exp, mi, trial, 3)
    master = FunctionFamily.from_model(
        graph, model, train_thetas, config.R_train, derive_seed(config.rng_seed, exp, mi, trial, 4)
    )
    rows = []
    watch = _Stopwatch(config.timings)
    for r in config.exp1_r_grid:
        family_r = FunctionFamily(
            graph=graph,
            probs=master.probs[:r],
            pools=master.pools[:r],
            model=model,
            thetas=train_thetas[:r],
        )
        for k in config.k_list:
            watch.start()
            mixed, _ = hiro(family_r, HiroConfig(k=k, T=config.T, R=config.R_train))
            report = evaluate_on(val_family, mixed)
            elapsed = watch.stop()
            rows.append(
                ResultRow(
                    experiment="1",
                    trial=trial,
                    graph_model=model_name,
                    k=k,
                    l=r,
                    T=config.T,
                    algorithm="hiro",
                    min_value=report.min_value,
                    stderr=_argmin_stderr(report),
                    wall_time_ms=elapsed,
                )
            )
    return rows


def _exp2_trial(config: ExperimentConfig, model_name: str, mi: int, trial: int) -> list[ResultRow]:
    exp = 2
    graph = _trial_graph(config, exp, model_name, mi, trial)
    train, evaluation = _families(config, graph, exp, mi, trial)
    rows = []
    watch = _Stopwatch(config.timings)
    for k in config.k_list:
        for T in config.exp2_T_grid:
            watch.start()
            mixed, _ = hiro(train, HiroConfig(k=k, T=T, R=config.R_train))
            report = evaluate_on(evaluation, mixed)
            elapsed = watch.stop()
            rows.append(
                ResultRow(
                    experiment="2",
                    trial=trial,
                    graph_model=model_name,
                    k=k,
                    l=train.l,
                    T=T,
                    algorithm="hiro",
                    min_value=report.min_value,
                    stderr=_argmin_stderr(report),
                    wall_time_ms=elapsed,
                )
            )
    return rows


def _baseline_rows(
    config: ExperimentConfig,
    exp: int,
    experiment_label: str,
    model_name: str,
    mi: int,
    trial: int,
    graph: Graph,
    train: FunctionFamily,
    evaluation: FunctionFamily,
) -> list[ResultRow]:
    """The four benchmark algorithms at every budget in k_list."""
    k_max = max(config.k_list)
    watch = _Stopwatch(config.timings)

    def row(k: int, algorithm: str, value: float, stderr: float, ms: float) -> ResultRow:
        return ResultRow(
            experiment=experiment_label,
            trial=trial,
            graph_model=model_name,
            k=k,
            l=train.l,
            T=config.T,
            algorithm=algorithm,
            min_value=value,
            stderr=stderr,
            wall_time_ms=ms,
        )

    rows = []

    watch.start()
    per_function_orders = []
    for i in range(train.l):
        one_hot = np.zeros(train.l)
        one_hot[i] = 1.0
        per_function_orders.append(greedy_order(train, one_hot, k_max))
    greedy_setup_ms = watch.stop()

    watch.start()
    bounds = derive_intervals(train)
    lo_pool = build_pool(
        graph, bounds.p_lo, config.R_train, derive_seed(config.rng_seed, exp, mi, trial, 10)
    )
    hi_pool = build_pool(
        graph, bounds.p_hi, config.R_train, derive_seed(config.rng_seed, exp, mi, trial, 11)
    )
    lo_family = FunctionFamily(graph=graph, probs=[bounds.p_lo], pools=[lo_pool])
    hi_family = FunctionFamily(graph=graph, probs=[bounds.p_hi], pools=[hi_pool])
    lo_order = greedy_order(lo_family, np.ones(1), k_max)
    hi_order = greedy_order(hi_family, np.ones(1), k_max)
    lu_setup_ms = watch.stop()

    for k in config.k_list:
        watch.start()
        draws = random_seed(
            graph, k, config.random_trials, derive_seed(config.rng_seed, exp, mi, trial, 12, k)
        )
        mins = np.array([evaluate_on(evaluation, s).min_value for s in draws])
        ms = watch.stop()
        rows.append(
            row(
                k,
                "random",
                float(mins.mean()),
                float(np.std(mins, ddof=1)) / math.sqrt(len(mins)) if len(mins) > 1 else 0.0,
                ms,
            )
        )

        watch.start()
        degree_set = top_k_degree(graph, k)
        report = evaluate_on(evaluation, degree_set)
        ms = watch.stop()
        rows.append(row(k, "degree", report.min_value, _argmin_stderr(report), ms))

        watch.start()
        rng = np.random.default_rng(derive_seed(config.rng_seed, exp, mi, trial, 13, k))
        pick = int(rng.integers(train.l))
        rg_set = tuple(sorted(per_function_orders[pick][:k]))
        report = evaluate_on(evaluation, rg_set)
        ms = watch.stop()
        rows.append(
            row(k, "random-greedy", report.min_value, _argmin_stderr(report), ms + greedy_setup_ms / len(config.k_list))
        )

        watch.start()
        s_lo = tuple(sorted(lo_order[:k]))
        s_hi = tuple(sorted(hi_order[:k]))
        value_lo = float(lo_family.pool_values(s_lo)[0])
        value_hi = float(lo_family.pool_values(s_hi)[0])
        lu_set = s_lo if value_lo >= value_hi else s_hi
        report = evaluate_on(evaluation, lu_set)
        ms = watch.stop()
        rows.append(
            row(k, "lu-greedy", report.min_value, _argmin_stderr(report), ms + lu_setup_ms / len(config.k_list))
        )
    return rows


def _exp3_trial(config: ExperimentConfig, model_name: str, mi: int, trial: int) -> list[ResultRow]:
    exp = 3
    graph = _trial_graph(config, exp, model_name, mi, trial)
    train, evaluation = _families(config, graph, exp, mi, trial)
    watch = _Stopwatch(config.timings)
    rows = []
    for k in config.k_list:
        watch.start()
        mixed, _ = hiro(train, HiroConfig(k=k, T=config.T, R=config.R_train))
        report = evaluate_on(evaluation, mixed)
        elapsed = watch.stop()
        rows.append(
            ResultRow(
                experiment="3",
                trial=trial,
                graph_model=model_name,
                k=k,
                l=train.l,
                T=config.T,
                algorithm="hiro",
                min_value=report.min_value,
                stderr=_argmin_stderr(report),
                wall_time_ms=elapsed,
            )
        )
    rows.extend(
        _baseline_rows(config, exp, "3", model_name, mi, trial, graph, train, evaluation)
    )
    return rows


def _exp4_trial(config: ExperimentConfig, model_name: str, mi: int, trial: int) -> list[ResultRow]:
    exp = 4
    graph = _trial_graph(config, exp, model_name, mi, trial)
    train, evaluation = _families(config, graph, exp, mi, trial)
    k = config.exp4_k
    watch = _Stopwatch(config.timings)
    rows = []

    watch.start()
    mixed, _ = hiro(train, HiroConfig(k=k, T=config.T, R=config.R_train))
    report = evaluate_on(evaluation, mixed)
    elapsed = watch.stop()
    rows.append(
        ResultRow(
            experiment="4",
            trial=trial,
            graph_model=model_name,
            k=k,
            l=train.l,
            T=config.T,
            algorithm="hiro-mixed",
            min_value=report.min_value,
            stderr=_argmin_stderr(report),
            wall_time_ms=elapsed,
        )
    )
    union = bicriteria_union(mixed)
    uniform = np.full(train.l, 1.0 / train.l)
    for beta in config.exp4_beta_grid:
        watch.start()
        k_sub = max(1, math.ceil(beta * union.size))
        subset = lazy_greedy(train, uniform, k_sub, candidates=union.nodes)
        report = evaluate_on(evaluation, subset)
        elapsed = watch.stop()
        rows.append(
            ResultRow(
                experiment="4",
                trial=trial,
                graph_model=model_name,
                k=k_sub,
                l=train.l,
                T=config.T,
                algorithm=f"union-{beta:g}",
                min_value=report.min_value,
                stderr=_argmin_stderr(report),
                wall_time_ms=elapsed,
            )
        )
    return rows


_TRIAL_RUNNERS = {1: _exp1_trial, 2: _exp2_trial, 3: _exp3_trial, 4: _exp4_trial}


def _run_task(args) -> list[ResultRow]:
    exp, config, model_name, mi, trial = args
    return _TRIAL_RUNNERS[exp](config, model_name, mi, trial)


def _execute_tasks(tasks, workers: int) -> list[ResultRow]:
    rows: list[ResultRow] = []
    if workers <= 1:
        for task in tasks:
            rows.extend(_run_task(task))
        return rows
    import multiprocessing

    method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    with ProcessPoolExecutor(max_workers=workers, mp_context=get_context(method)) as pool:
        for chunk in pool.map(_run_task, tasks):
            rows.extend(chunk)
    return rows


def _write_outputs(config: ExperimentConfig, rows: list[ResultRow], name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    results_path = os.path.join(config.out_dir, f"{name}_results.csv")
    write_results_csv(rows, results_path)
    write_manifest(config, os.path.join(config.out_dir, f"{name}_manifest.txt"), name)
    return results_path


def run_experiment(exp: int, config: ExperimentConfig) -> list[ResultRow]:
    """Run one of the four experiment sweeps and write its CSV + manifest."""
    if exp not in _TRIAL_RUNNERS:
        raise ParameterError("experiment must be 1, 2, 3 or 4")
    config.validate()
    tasks = [
        (exp, config, name, mi, trial)
        for mi, name in enumerate(config.graph_models)
        for trial in range(config.trials)
    ]
    rows = _execute_tasks(tasks, config.workers)
    rows.sort(key=_row_key)
    _write_outputs(config, rows, f"experiment{exp}")
    return rows


def run_experiment_1(config: ExperimentConfig) -> list[ResultRow]:
    return run_experiment(1, config)


def run_experiment_2(config: ExperimentConfig) -> list[ResultRow]:
    return run_experiment(2, config)


def run_experiment_3(config: ExperimentConfig) -> list[ResultRow]:
    return run_experiment(3, config)


def run_experiment_4(config: ExperimentConfig) -> list[ResultRow]:
    return run_experiment(4, config)


def run_pipeline(config: ExperimentConfig) -> tuple[list[ResultRow], HiroDiagnostics]:
    """One full pass: graph, cover, pools, robust optimization, evaluation
    against every baseline, then CSV + diagnostics + manifest."""
    config.validate()
    exp = 5
    model_name = config.graph_models[0]
    stage = "generate/load graph"
    try:
        graph = _trial_graph(config, exp, model_name, 0, 0)
        stage = "sample cover / build pools"
        train, evaluation = _families(config, graph, exp, 0, 0)
        stage = "robust optimization"
        k = config.k_list[0]
        mixed, diagnostics = hiro(train, HiroConfig(k=k, T=config.T, R=config.R_train))
        stage = "evaluation"
        rows = []
        report = evaluate_on(evaluation, mixed)
        rows.append(
            ResultRow(
                experiment="pipeline",
                trial=0,
                graph_model=model_name,
                k=k,
                l=train.l,
                T=config.T,
                algorithm="hiro",
                min_value=report.min_value,
                stderr=_argmin_stderr(report),
                wall_time_ms=0.0,
            )
        )
        union = bicriteria_union(mixed)
        union_report = evaluate_on(evaluation, union.nodes)
        rows.append(
            ResultRow(
                experiment="pipeline",
                trial=0,
                graph_model=model_name,
                k=union.size,
                l=train.l,
                T=config.T,
                algorithm="union",
                min_value=union_report.min_value,
                stderr=_argmin_stderr(union_report),
                wall_time_ms=0.0,
            )
        )
        base_config = replace(config, k_list=(k,))
        rows.extend(
            _baseline_rows(
                base_config, exp, "pipeline", model_name, 0, 0, graph, train, evaluation
            )
        )
        stage = "write outputs"
        rows.sort(key=_row_key)
        _write_outputs(config, rows, "pipeline")
        diagnostics.write_csv(os.path.join(config.out_dir, "pipeline_diagnostics.csv"))
        return rows, diagnostics
    except Exception as exc:
        message = f"pipeline stage '{stage}' failed: {exc}"
        try:
            wrapped = type(exc)(message)
        except Exception:
            wrapped = RuntimeError(message)
        raise wrapped from exc
