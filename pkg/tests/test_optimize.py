import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustim.cascade import _counts_from, build_pool, exact_influence, pool_influence
from robustim.errors import ParameterError
from robustim.hypermodel import HyperModel, edge_probabilities, function_cover_radius, sample_cover
from robustim.optimize import (
    FunctionFamily,
    HiroConfig,
    MixedStrategy,
    as_seed_set,
    bicriteria_union,
    evaluate,
    evaluate_on,
    hiro,
    lazy_greedy,
    mwu_weights,
    per_function_optima,
    robust_ratio,
)
from robustim.seeding import derive_seed
from robustim.verify import brute_force_robust, improper_gap_instance

from conftest import random_digraph, star_graph


def naive_greedy(family: FunctionFamily, weights, k: int) -> tuple[int, ...]:
    """Full-scan reference greedy using BFS-based counts (no index, no heap).

    Marginal gains are accumulated function by function exactly like the
    production code so that floating-point ties resolve identically.
    """
    graph = family.graph
    chosen: list[int] = []
    base_counts = [np.zeros(pool.R, dtype=np.int64) for pool in family.pools]
    base_totals = [0] * family.l
    for _ in range(k):
        best_node, best_gain = None, -np.inf
        for v in range(graph.n):
            if v in chosen:
                continue
            candidate_gain = 0.0
            for i, pool in enumerate(family.pools):
                if weights[i] == 0.0:
                    continue
                counts = _counts_from(graph, pool.alive, sorted(set(chosen + [v])))
                candidate_gain += (
                    weights[i] * (int(counts.sum()) - base_totals[i]) / pool.R
                )
            if candidate_gain > best_gain:
                best_gain, best_node = candidate_gain, v
        chosen.append(best_node)
        for i, pool in enumerate(family.pools):
            base_counts[i] = _counts_from(graph, pool.alive, sorted(set(chosen)))
            base_totals[i] = int(base_counts[i].sum())
    return tuple(sorted(chosen))


def random_family(rng, n, m, l, R, d=2, link="logistic"):
    graph = random_digraph(rng, n, m, d=d)
    model = HyperModel(link, B=1.0, d=d)
    thetas = rng.uniform(-1, 1, size=(l, d))
    return FunctionFamily.from_model(graph, model, thetas, R, int(rng.integers(2**31)))


class TestLazyGreedy:
    def test_star_center_dominates(self):
        g = star_graph(6)
        fam = FunctionFamily.from_probs(g, [np.ones(g.m)], R=50, rng_seed=0)
        assert lazy_greedy(fam, np.ones(1), 1) == (0,)

    def test_matches_naive_greedy_on_random_instances(self, rng):
        for case in range(50):
            n = int(rng.integers(5, 31))
            m = int(rng.integers(n, 3 * n))
            l = int(rng.integers(1, 4))
            k = int(rng.integers(1, min(6, n)))
            fam = random_family(rng, n, m, l, R=120)
            weights = rng.random(l)
            weights /= weights.sum()
            assert lazy_greedy(fam, weights, k) == naive_greedy(fam, weights, k), (
                f"case {case} diverged"
            )

    def test_guarantee_against_exact_optimum(self, rng):
        for _ in range(10):
            n = int(rng.integers(4, 11))
            m = int(rng.integers(3, 13))
            g = random_digraph(rng, n, m)
            p = rng.random(m)
            k = int(rng.integers(1, 4))
            fam = FunctionFamily.from_probs(g, [p], R=3000, rng_seed=int(rng.integers(2**31)))
            greedy_set = lazy_greedy(fam, np.ones(1), k)
            _, optimum = brute_force_robust(g, [p], k)
            greedy_value = exact_influence(g, p, greedy_set)
            assert greedy_value >= (1 - 1 / math.e) * optimum - 1e-9

    def test_budget_exceeds_nodes(self, rng):
        fam = random_family(rng, 6, 10, 1, R=20)
        with pytest.raises(ParameterError):
            lazy_greedy(fam, np.ones(1), 7)

    def test_candidate_restriction(self, rng):
        g = star_graph(5)
        fam = FunctionFamily.from_probs(g, [np.ones(g.m)], R=30, rng_seed=0)
        restricted = lazy_greedy(fam, np.ones(1), 2, candidates=[2, 3, 4])
        assert set(restricted) <= {2, 3, 4}

    def test_weight_validation(self, rng):
        fam = random_family(rng, 6, 10, 2, R=20)
        with pytest.raises(ParameterError):
            lazy_greedy(fam, np.ones(3), 2)
        with pytest.raises(ParameterError):
            lazy_greedy(fam, np.array([0.5, -0.5]), 2)


class TestMwuWeights:
    def test_empty_history_uniform(self):
        assert np.allclose(mwu_weights([], 0.5, l=4), 0.25)

    def test_single_round_example(self):
        w = mwu_weights([np.array([1.0, 0.0])], math.log(2))
        assert np.allclose(w, [1 / 3, 2 / 3], atol=1e-9)

    def test_identical_history_stays_uniform(self):
        history = [np.array([0.4, 0.4, 0.4])] * 5
        assert np.allclose(mwu_weights(history, 0.7), 1 / 3)

    def test_lowest_cumulative_payoff_gets_top_weight(self, rng):
        for _ in range(20):
            history = [rng.random(5) for _ in range(4)]
            cum = np.sum(history, axis=0)
            w = mwu_weights(history, 0.9)
            assert np.argmax(w) == np.argmin(cum)

    @given(
        st.lists(
            st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3),
            min_size=0,
            max_size=100,
        ),
        st.floats(0.0, 5.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_normalization_fuzz(self, history, eta):
        vectors = [np.array(h) for h in history]
        w = mwu_weights(vectors, eta, l=3)
        assert w.shape == (3,)
        assert np.all(w >= 0)
        assert abs(w.sum() - 1.0) <= 1e-9

    def test_rejects_unnormalized_payoffs(self):
        with pytest.raises(ParameterError):
            mwu_weights([np.array([2.0, 0.0])], 0.5)

    def test_requires_l_when_empty(self):
        with pytest.raises(ParameterError):
            mwu_weights([], 0.5)


class TestHiro:
    def test_single_function_equals_plain_greedy(self, rng):
        fam = random_family(rng, 12, 30, 1, R=150)
        mixed, diag = hiro(fam, HiroConfig(k=3, T=5))
        single = lazy_greedy(fam, np.ones(1), 3)
        assert all(s == single for s in mixed.seed_sets)
        value = float(fam.pool_values(single)[0])
        report = evaluate_on(fam, mixed)
        assert report.min_value == pytest.approx(value, abs=1e-12)

    def test_improper_instance_needs_a_mixture(self):
        fix = improper_gap_instance(5)
        fam = FunctionFamily.from_probs(fix.graph, fix.probs, R=100, rng_seed=1)
        mixed, _ = hiro(fam, HiroConfig(k=1, T=20))
        report = evaluate(fam, mixed, exact=True)
        assert report.min_value >= 2.0
        _, best_single = brute_force_robust(fix.graph, fix.probs, 1)
        assert best_single == 1.0

    def test_weights_normalized_every_round(self, rng):
        fam = random_family(rng, 10, 25, 3, R=100)
        _, diag = hiro(fam, HiroConfig(k=2, T=12))
        for entry in diag.rounds:
            assert abs(entry.weights.sum() - 1.0) <= 1e-9
            assert entry.payoffs.shape == (3,)

    def test_more_rounds_help_on_average(self, rng):
        g = random_digraph(rng, 40, 120, d=2)
        model = HyperModel("logistic", B=1.0, d=2)
        short_minus_long = []
        for run in range(20):
            run_rng = np.random.default_rng(500 + run)
            thetas = run_rng.uniform(-1, 1, size=(4, 2))
            fam = FunctionFamily.from_model(g, model, thetas, R=300, rng_seed=600 + run)
            long_mixed, _ = hiro(fam, HiroConfig(k=3, T=15))
            short_mixed, _ = hiro(fam, HiroConfig(k=3, T=1))
            long_v = evaluate_on(fam, long_mixed).min_value
            short_v = evaluate_on(fam, short_mixed).min_value
            short_minus_long.append(short_v - long_v)
        assert np.mean(short_minus_long) <= 1e-9

    def test_near_optimality_small_instances(self, rng):
        # light version of the acceptance criterion (8 instances here)
        for case in range(8):
            n = int(rng.integers(5, 11))
            m = int(rng.integers(4, 15))
            g = random_digraph(rng, n, m, d=2)
            model = HyperModel("logistic", B=1.0, d=2)
            l = int(rng.integers(1, 5))
            thetas = rng.uniform(-1, 1, size=(l, 2))
            fam = FunctionFamily.from_model(g, model, thetas, R=2000, rng_seed=900 + case)
            k = int(rng.integers(1, 3))
            mixed, _ = hiro(fam, HiroConfig(k=k, T=50))
            mixed_value = evaluate(fam, mixed, exact=True).min_value
            _, optimum = brute_force_robust(g, [p for p in fam.probs], k)
            assert mixed_value >= (1 - 1 / math.e) * optimum - 0.05 * n

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            HiroConfig(k=0)
        with pytest.raises(ParameterError):
            HiroConfig(k=1, T=0)
        with pytest.raises(ParameterError):
            HiroConfig(k=1, eta=0.0)


class TestBicriteriaUnion:
    def test_single_round_is_identity(self, rng):
        fam = random_family(rng, 10, 25, 2, R=80)
        mixed, _ = hiro(fam, HiroConfig(k=3, T=1))
        union = bicriteria_union(mixed)
        assert union.nodes == mixed.seed_sets[0]
        assert union.blowup == 1.0

    def test_repeated_set_has_no_blowup(self):
        mixed = MixedStrategy(seed_sets=((1, 4), (1, 4), (1, 4)))
        union = bicriteria_union(mixed)
        assert union.nodes == (1, 4)
        assert union.size == 2
        assert union.blowup == 1.0

    def test_union_dominates_mixture_per_pool(self, rng):
        for _ in range(10):
            fam = random_family(rng, 15, 40, 3, R=100)
            mixed, _ = hiro(fam, HiroConfig(k=2, T=6))
            union = bicriteria_union(mixed)
            union_values = fam.pool_values(union.nodes)
            mix_values = np.mean([fam.pool_values(s) for s in mixed.seed_sets], axis=0)
            assert np.all(union_values >= mix_values - 1e-12)
            assert union.size <= mixed.T * mixed.k


class TestEvaluate:
    def test_single_function_single_set_is_a_pool_average(self, rng):
        g = random_digraph(rng, 9, 20)
        p = rng.random(g.m)
        fam = FunctionFamily.from_probs(g, [p], R=10, rng_seed=3, build_index=False)
        report = evaluate(fam, (0, 2), high_R=4000, rng_seed=12)
        fresh = build_pool(g, p, 4000, derive_seed(12, 1_000_003, 0))
        expected = pool_influence(g, fresh, (0, 2))
        assert report.min_value == expected.mean
        assert report.per_function_stderr[0] == expected.stderr

    def test_exact_mode_matches_exact_influence(self, rng):
        g = random_digraph(rng, 8, 12)
        probs = [rng.random(g.m) for _ in range(3)]
        fam = FunctionFamily.from_probs(g, probs, R=10, rng_seed=0, build_index=False)
        report = evaluate(fam, (1, 3), exact=True)
        direct = [exact_influence(g, p, (1, 3)) for p in probs]
        assert np.allclose(report.per_function_values, direct, atol=1e-9)
        assert report.min_value == pytest.approx(min(direct), abs=1e-9)

    def test_fresh_pools_are_unbiased_against_exact(self, rng):
        violations = 0
        for case in range(25):
            g = random_digraph(rng, 7, 10)
            p = rng.random(g.m)
            fam = FunctionFamily.from_probs(g, [p], R=400, rng_seed=case, build_index=False)
            seeds = as_seed_set(rng.choice(g.n, size=2, replace=False))
            report = evaluate(fam, seeds, high_R=40_000, rng_seed=5000 + case)
            truth = exact_influence(g, p, seeds)
            if abs(report.min_value - truth) > 4 * max(report.per_function_stderr[0], 1e-12):
                violations += 1
        assert violations == 0

    def test_mixture_scored_as_average_over_sets(self, rng):
        g = random_digraph(rng, 10, 22)
        probs = [rng.random(g.m) for _ in range(2)]
        fam = FunctionFamily.from_probs(g, probs, R=500, rng_seed=1)
        mixed = MixedStrategy(seed_sets=((0, 1), (2, 3), (4, 5)))
        report = evaluate_on(fam, mixed)
        for i in range(2):
            per_set = [fam.pool_values(s)[i] for s in mixed.seed_sets]
            assert report.per_function_values[i] == pytest.approx(np.mean(per_set), abs=1e-12)


class TestReductionPipeline:
    def test_cover_controls_function_values_end_to_end(self, rng):
        # value-accuracy budget -> parameter radius -> sampled cover; probing
        # random hyperparameters must find a cover function within the budget.
        g = random_digraph(rng, 6, 8, d=2)
        model = HyperModel("logistic", B=1.0, d=2)
        epsilon_value = 2.0
        delta = 0.2
        radius = function_cover_radius(epsilon_value, g)
        seeds = (0, 3)
        draws, failures = 12, 0
        for draw in range(draws):
            cover = sample_cover(model, radius, delta, rng_seed=3000 + draw)
            probes = rng.uniform(-1, 1, size=(200, 2))
            dists = np.abs(probes[:, None, :] - cover.thetas[None, :, :]).sum(axis=2)
            nearest = np.argmin(dists, axis=1)
            cache: dict[int, float] = {}
            ok = True
            for probe, j in zip(probes, nearest):
                f_probe = exact_influence(g, edge_probabilities(model, probe, g), seeds)
                if int(j) not in cache:
                    theta_j = cover.thetas[int(j)]
                    cache[int(j)] = exact_influence(
                        g, edge_probabilities(model, theta_j, g), seeds
                    )
                if abs(f_probe - cache[int(j)]) > epsilon_value:
                    ok = False
                    break
            failures += not ok
        assert failures <= max(1, math.ceil(delta * draws))


class TestRobustRatio:
    def test_own_optimum_scores_one(self, rng):
        g = random_digraph(rng, 7, 10)
        p = rng.random(g.m)
        fam = FunctionFamily.from_probs(g, [p], R=10, rng_seed=0, build_index=False)
        best, _ = brute_force_robust(g, [p], 2)
        assert robust_ratio(fam, best, 2, "brute_force") == pytest.approx(1.0, abs=1e-9)

    def test_never_exceeds_one_in_exact_mode(self, rng):
        for _ in range(10):
            g = random_digraph(rng, 7, 10)
            probs = [rng.random(g.m) for _ in range(2)]
            fam = FunctionFamily.from_probs(g, probs, R=10, rng_seed=0, build_index=False)
            optima = per_function_optima(fam, 2, "brute_force")
            seeds = as_seed_set(rng.choice(g.n, size=2, replace=False))
            assert robust_ratio(fam, seeds, 2, "brute_force", optima=optima) <= 1.0 + 1e-9

    def test_greedy_mode_runs_on_pools(self, rng):
        fam = random_family(rng, 10, 25, 2, R=400)
        rho = robust_ratio(fam, (0, 1), 2, "greedy")
        assert 0.0 < rho <= 1.0 + 1e-9

    def test_unknown_mode(self, rng):
        fam = random_family(rng, 6, 10, 1, R=10)
        with pytest.raises(ParameterError):
            robust_ratio(fam, (0,), 1, "annealing")
