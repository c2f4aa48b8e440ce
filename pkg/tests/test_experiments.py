import dataclasses

import pytest

from robustim.errors import ParameterError, ParseError
from robustim.experiments import (
    RESULT_COLUMNS,
    ExperimentConfig,
    ResultRow,
    config_from_sources,
    parse_config_file,
    run_experiment,
    run_pipeline,
    write_manifest,
    write_results_csv,
)


def tiny_config(out_dir, **overrides) -> ExperimentConfig:
    base = {
        "scale": "desk",
        "graph_models": ("erdos_renyi",),
        "n": 30,
        "d": 2,
        "l": 3,
        "T": 2,
        "k_list": (3,),
        "R_train": 80,
        "R_eval": 80,
        "trials": 2,
        "random_trials": 10,
        "rng_seed": 7,
        "out_dir": str(out_dir),
        "exp1_r_grid": (1, 3),
        "exp1_validation_l": 4,
        "exp2_T_grid": (1, 3),
        "exp4_k": 2,
        "exp4_beta_grid": (0.5, 1.0),
    }
    base.update(overrides)
    return config_from_sources(None, base)


class TestConfig:
    def test_scale_presets(self):
        desk = config_from_sources(None, {"scale": "desk"})
        assert (desk.n, desk.R_train, desk.R_eval, desk.trials) == (100, 1000, 1000, 10)
        paper = config_from_sources(None, {"scale": "paper"})
        assert (paper.n, paper.R_eval, paper.trials) == (500, 10000, 50)

    def test_file_values_and_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nn=64\nk_list=2,4\nlink=probit\ntimings=true\n")
        config = config_from_sources(parse_config_file(cfg), {"rng_seed": 5})
        assert config.n == 64
        assert config.k_list == (2, 4)
        assert config.link == "probit"
        assert config.timings is True
        assert config.rng_seed == 5

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("mystery=1\n")
        with pytest.raises(ParseError):
            config_from_sources(parse_config_file(cfg), {})

    def test_malformed_line_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just some words\n")
        with pytest.raises(ParseError):
            parse_config_file(cfg)

    def test_validation(self):
        with pytest.raises(ParameterError):
            config_from_sources(None, {"graph_models": ("mystery",)})
        with pytest.raises(ParameterError):
            config_from_sources(None, {"k_list": (0,)})
        with pytest.raises(ParameterError):
            config_from_sources(None, {"workers": 0})

    def test_manifest_is_a_valid_config(self, tmp_path):
        config = tiny_config(tmp_path)
        path = tmp_path / "manifest.txt"
        write_manifest(config, path, "test")
        reread = config_from_sources(parse_config_file(path), {})
        assert dataclasses.asdict(reread) == dataclasses.asdict(config)


class TestResultCsv:
    def test_header_and_formatting(self, tmp_path):
        rows = [
            ResultRow("3", 1, "erdos_renyi", 10, 20, 10, "hiro", 12.3456789, 0.00123456789, 0.0),
            ResultRow("3", 0, "erdos_renyi", 10, 20, 10, "degree", 1.0, 0.0, 0.0),
        ]
        path = tmp_path / "r.csv"
        write_results_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(RESULT_COLUMNS)
        # sorted by trial, value at 6 significant digits
        assert lines[1].startswith("3,0,erdos_renyi,10,20,10,degree,1,0,0")
        assert "12.3457" in lines[2]
        assert "0.00123457" in lines[2]


class TestPipeline:
    def test_artifacts_written(self, tmp_path):
        config = tiny_config(tmp_path / "out")
        rows, diagnostics = run_pipeline(config)
        algorithms = {row.algorithm for row in rows}
        assert algorithms == {"hiro", "union", "random", "degree", "random-greedy", "lu-greedy"}
        out = tmp_path / "out"
        assert (out / "pipeline_results.csv").exists()
        assert (out / "pipeline_manifest.txt").exists()
        diag_lines = (out / "pipeline_diagnostics.csv").read_text().splitlines()
        assert diag_lines[0] == "round,weights,seed_set,payoffs,running_min"
        assert len(diag_lines) == 1 + config.T

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path):
        config = tiny_config(tmp_path / "a")
        run_pipeline(config)
        manifest = parse_config_file(tmp_path / "a" / "pipeline_manifest.txt")
        config_b = config_from_sources(manifest, {"out_dir": str(tmp_path / "b")})
        run_pipeline(config_b)
        a = (tmp_path / "a" / "pipeline_results.csv").read_bytes()
        b = (tmp_path / "b" / "pipeline_results.csv").read_bytes()
        assert a == b
        da = (tmp_path / "a" / "pipeline_diagnostics.csv").read_bytes()
        db = (tmp_path / "b" / "pipeline_diagnostics.csv").read_bytes()
        assert da == db

    def test_failure_names_stage(self, tmp_path):
        config = tiny_config(tmp_path, graph_path=str(tmp_path / "missing.txt"))
        with pytest.raises(FileNotFoundError, match="generate/load graph"):
            run_pipeline(config)


class TestExperimentRunners:
    def test_exp1_grid_coverage(self, tmp_path):
        config = tiny_config(tmp_path / "out")
        rows = run_experiment(1, config)
        assert {row.l for row in rows} == {1, 3}
        assert {row.trial for row in rows} == {0, 1}
        assert all(row.algorithm == "hiro" for row in rows)
        assert len(rows) == 2 * 2 * 1  # trials x r grid x k grid

    def test_exp2_grid_coverage(self, tmp_path):
        config = tiny_config(tmp_path / "out")
        rows = run_experiment(2, config)
        assert {row.T for row in rows} == {1, 3}
        assert len(rows) == 2 * 2

    def test_exp3_algorithms_present(self, tmp_path):
        config = tiny_config(tmp_path / "out", trials=1)
        rows = run_experiment(3, config)
        assert {row.algorithm for row in rows} == {
            "hiro",
            "random",
            "degree",
            "random-greedy",
            "lu-greedy",
        }
        assert all(0 <= row.min_value <= config.n for row in rows)

    def test_exp4_union_dominates_mixture(self, tmp_path):
        config = tiny_config(tmp_path / "out", trials=2, T=4)
        rows = run_experiment(4, config)
        by_algo = {}
        for row in rows:
            by_algo.setdefault(row.algorithm, []).append(row)
        assert set(by_algo) == {"hiro-mixed", "union-0.5", "union-1"}
        for mixed_row, union_row in zip(by_algo["hiro-mixed"], by_algo["union-1"]):
            assert union_row.k <= config.T * config.exp4_k
        assert all(r.k == config.exp4_k for r in by_algo["hiro-mixed"])

    def test_invalid_experiment_number(self, tmp_path):
        with pytest.raises(ParameterError):
            run_experiment(7, tiny_config(tmp_path))

    def test_worker_count_does_not_change_results(self, tmp_path):
        config_a = tiny_config(tmp_path / "w1", workers=1)
        config_b = tiny_config(tmp_path / "w2", workers=2)
        run_experiment(2, config_a)
        run_experiment(2, config_b)
        a = (tmp_path / "w1" / "experiment2_results.csv").read_bytes()
        b = (tmp_path / "w2" / "experiment2_results.csv").read_bytes()
        assert a == b

    def test_timings_flag_fills_column(self, tmp_path):
        config = tiny_config(tmp_path / "out", trials=1, timings=True)
        rows = run_experiment(2, config)
        assert any(row.wall_time_ms > 0 for row in rows)
        config_off = tiny_config(tmp_path / "off", trials=1)
        rows_off = run_experiment(2, config_off)
        assert all(row.wall_time_ms == 0.0 for row in rows_off)
