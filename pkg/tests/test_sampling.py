import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from permcount.graph import BipartiteGraph, gen_appendix_b, gen_complete, gen_fibonacci
from permcount.matching import hopcroft_karp
from permcount.sampling import (
    EstimateAccumulator,
    decimal_from_log10,
    diagnostics,
    edge_marginals,
    estimate_count,
    estimate_functional,
    merge,
    sample_matching,
    sample_uniforms,
    _prepare,
    _run_chunks,
    _sample_with_uniforms,
)
from permcount.scaling import prune_non_extendable, sinkhorn, uniform_weights


class TestSampleMatching:
    def test_identity_forced(self, rng):
        g = BipartiteGraph(3, [(0, 0), (1, 1), (2, 2)])
        s = sample_matching(g, sinkhorn(g), rng)
        assert s.matching == (0, 1, 2)
        assert s.log_prob == 0.0

    def test_k22_uniform_halves(self, rng):
        g = gen_complete(2)
        w = uniform_weights(g)
        seen = {(0, 1): 0, (1, 0): 0}
        for _ in range(2000):
            s = sample_matching(g, w, rng)
            assert s.log_prob == pytest.approx(math.log(0.5))
            seen[s.matching] += 1
        assert min(seen.values()) > 800

    def test_path_pattern_unique(self, rng):
        g = prune_non_extendable(BipartiteGraph(2, [(0, 0), (0, 1), (1, 1)]))
        s = sample_matching(g, uniform_weights(g), rng)
        assert s.matching == (0, 1) and s.log_prob == 0.0

    def test_scaled_log_prob_nonpositive(self, rng):
        g = prune_non_extendable(gen_fibonacci(6))
        w = sinkhorn(g)
        for _ in range(50):
            assert sample_matching(g, w, rng).log_prob <= 0.0

    def test_support_correctness_k33(self, rng):
        g = gen_complete(3)
        w = sinkhorn(g)
        seen = set()
        for _ in range(200):
            m = sample_matching(g, w, rng).matching
            assert sorted(m) == [0, 1, 2]
            seen.add(m)
        assert len(seen) == 6


class TestKernelEquivalence:
    def check(self, graph, mode, seed, count=40):
        prep = _prepare(graph, mode, 1e-10, 100_000)
        pruned, weights, kernel_args = prep
        acc, lw, matches = _run_chunks(
            graph.n, kernel_args, count, seed, 1, collect_matchings=True
        )
        for i in range(count):
            u = sample_uniforms(seed, i, 2 * graph.n - 1)
            ref = _sample_with_uniforms(pruned, weights, u)
            assert ref.log_prob == -lw[i]
            assert list(ref.matching) == list(matches[i])

    def test_fibonacci_scaled(self):
        self.check(gen_fibonacci(6), "scaled", 3)

    def test_appendix_b_uniform(self):
        self.check(gen_appendix_b(5), "uniform", 7)

    def test_random_graphs_both_modes(self, rng):
        checked = 0
        while checked < 15:
            g = random_graph(rng, int(rng.integers(2, 7)), 0.6)
            if hopcroft_karp(g) is None:
                continue
            seed = int(rng.integers(1 << 30))
            self.check(g, "scaled", seed, count=20)
            self.check(g, "uniform", seed, count=20)
            checked += 1


class TestEstimateCount:
    def test_k44_exact(self):
        r = estimate_count(gen_complete(4), 100, 1)
        assert r.estimate_decimal == "24"
        assert r.stderr_log10 is None
        assert r.ci95 == ("24", "24")
        assert r.ess == pytest.approx(100, rel=1e-9)

    def test_no_perfect_matching_zero(self):
        g = BipartiteGraph(2, [(0, 0), (1, 0)])
        r = estimate_count(g, 50, 1)
        assert r.estimate_decimal == "0"
        assert r.estimate_log10 is None

    def test_appendix_b_close(self):
        r = estimate_count(gen_appendix_b(10), 10_000, 42)
        assert abs(10.0**r.estimate_log10 - 11) / 11 < 0.1

    def test_seed_determinism_across_workers(self):
        g = gen_appendix_b(8)
        rs = [estimate_count(g, 10_000, 5, workers=w) for w in (1, 2, 8)]
        for r in rs[1:]:
            assert r.estimate_log10 == rs[0].estimate_log10
            assert r.stderr_log10 == rs[0].stderr_log10
            assert r.ess == rs[0].ess
            assert r.kl_hat == rs[0].kl_hat

    def test_different_seeds_differ(self):
        g = gen_appendix_b(8)
        a = estimate_count(g, 1000, 1)
        b = estimate_count(g, 1000, 2)
        assert a.estimate_log10 != b.estimate_log10

    def test_log_space_safety_large_uniform(self):
        # Weights here span hundreds of orders of magnitude; everything must
        # stay finite in log space.
        r = estimate_count(gen_appendix_b(200), 50, 3, mode="uniform")
        assert math.isfinite(r.estimate_log10)
        assert math.isfinite(r.ess) and r.ess >= 1.0
        assert math.isfinite(r.kl_hat)

    def test_large_magnitude_exact(self):
        # On the complete graph every sample has weight exactly n!, far outside
        # double range on the linear scale; the log-space estimate is exact.
        r = estimate_count(gen_complete(60), 50, 3)
        assert r.estimate_log10 == pytest.approx(math.log10(math.factorial(60)), abs=1e-9)
        assert r.estimate_decimal.endswith("e+81")

    def test_interval_contains_estimate(self):
        r = estimate_count(gen_fibonacci(8), 2000, 9)
        lo, hi = (float(x) for x in r.ci95)
        assert lo <= 10.0**r.estimate_log10 <= hi
        assert r.ess <= r.n_samples + 1e-9

    def test_input_validation(self):
        with pytest.raises(ValueError):
            estimate_count(gen_complete(2), 0, 1)
        with pytest.raises(ValueError):
            estimate_count(gen_complete(2), 10, 1, mode="nope")


class TestFunctional:
    def test_constant_function(self):
        r = estimate_functional(gen_fibonacci(5), lambda m: 1.0, 500, 1)
        assert float(r.estimate_decimal) == pytest.approx(1.0, abs=1e-12)

    def test_fixed_points_k33(self):
        f = lambda m: sum(1 for i, v in enumerate(m) if i == v)
        r = estimate_functional(gen_complete(3), f, 4000, 2)
        assert float(r.estimate_decimal) == pytest.approx(1.0, abs=0.1)

    def test_edge_indicator_k22(self):
        f = lambda m: 1.0 if m[0] == 0 else 0.0
        r = estimate_functional(gen_complete(2), f, 4000, 3)
        assert float(r.estimate_decimal) == pytest.approx(0.5, abs=0.05)

    def test_no_perfect_matching(self):
        g = BipartiteGraph(2, [(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            estimate_functional(g, lambda m: 1.0, 10, 1)


class TestEdgeMarginals:
    def test_complete_uniform(self):
        m = edge_marginals(gen_complete(4), 4000, 1)
        assert np.allclose(m, 0.25, atol=0.05)

    def test_identity_exact(self):
        g = BipartiteGraph(3, [(0, 0), (1, 1), (2, 2)])
        m = edge_marginals(g, 100, 1)
        assert np.allclose(m, np.eye(3), atol=1e-15)

    def test_rows_cols_sum_to_one(self):
        m = edge_marginals(gen_fibonacci(6), 1000, 4)
        assert np.abs(m.sum(axis=0) - 1).max() < 1e-12
        assert np.abs(m.sum(axis=1) - 1).max() < 1e-12

    def test_fibonacci_marginal(self):
        # Edge (0,0) appears in 2 of the 3 matchings of the tridiagonal n=3 graph.
        m = edge_marginals(gen_fibonacci(3), 6000, 5)
        assert m[0, 0] == pytest.approx(2 / 3, abs=0.04)
        assert m[1, 1] == pytest.approx(1 / 3, abs=0.04)


class TestAccumulator:
    def test_merge_identity(self):
        a = EstimateAccumulator.from_log_weights(np.array([0.1, 2.0, -1.0]))
        e = EstimateAccumulator()
        m = merge(a, e)
        assert m.count == a.count
        assert m.log_sum_w == a.log_sum_w
        assert m.log_sum_w2 == a.log_sum_w2

    def test_merge_commutative(self):
        a = EstimateAccumulator.from_log_weights(np.array([0.5, 1.5]))
        b = EstimateAccumulator.from_log_weights(np.array([-2.0, 3.0, 0.0]))
        x, y = merge(a, b), merge(b, a)
        assert x.log_sum_w == pytest.approx(y.log_sum_w, rel=1e-15)
        assert x.log_sum_w2 == pytest.approx(y.log_sum_w2, rel=1e-15)
        assert x.count == y.count

    def test_split_equals_unsplit(self, rng):
        lw = rng.normal(0, 50, size=1000)
        whole = EstimateAccumulator.from_log_weights(lw)
        split = merge(
            EstimateAccumulator.from_log_weights(lw[:400]),
            EstimateAccumulator.from_log_weights(lw[400:]),
        )
        assert split.log_sum_w == pytest.approx(whole.log_sum_w, rel=1e-12)
        assert split.log_sum_w2 == pytest.approx(whole.log_sum_w2, rel=1e-12)
        d1, d2 = diagnostics(whole), diagnostics(split)
        assert d1["ess"] == pytest.approx(d2["ess"], rel=1e-12)
        assert d1["kl_hat"] == pytest.approx(d2["kl_hat"], rel=1e-9, abs=1e-12)

    def test_function_sums_merge(self):
        lw = np.array([0.0, 1.0, 2.0, 3.0])
        fv = np.array([1.0, -1.0, 0.5, 2.0])
        whole = EstimateAccumulator.from_log_weights(lw, fv)
        split = merge(
            EstimateAccumulator.from_log_weights(lw[:2], fv[:2]),
            EstimateAccumulator.from_log_weights(lw[2:], fv[2:]),
        )
        direct = float(np.dot(np.exp(lw), fv))
        for acc in (whole, split):
            got = acc.fn_sign[0] * math.exp(acc.fn_log_abs[0])
            assert got == pytest.approx(direct, rel=1e-12)

    def test_mismatched_functions(self):
        a = EstimateAccumulator.from_log_weights(np.array([0.0]), np.array([1.0]))
        b = EstimateAccumulator.from_log_weights(np.array([0.0]))
        with pytest.raises(ValueError):
            merge(a, b)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-300, 300), min_size=1, max_size=30), st.integers(0, 29))
    def test_merge_associative(self, lws, cut):
        lw = np.array(lws)
        cut = min(cut, len(lw))
        a = EstimateAccumulator.from_log_weights(lw[:cut])
        b = EstimateAccumulator.from_log_weights(lw[cut:])
        whole = EstimateAccumulator.from_log_weights(lw)
        m = merge(a, b)
        assert m.count == whole.count
        assert m.log_sum_w == pytest.approx(whole.log_sum_w, rel=1e-12)


class TestDiagnostics:
    def test_equal_weights(self):
        acc = EstimateAccumulator.from_log_weights(np.full(10, 3.7))
        d = diagnostics(acc)
        assert d["ess"] == pytest.approx(10.0, rel=1e-12)
        assert d["kl_hat"] == pytest.approx(0.0, abs=1e-12)

    def test_single_heavy_weight(self):
        lw = np.array([0.0] + [-800.0] * 9)
        d = diagnostics(EstimateAccumulator.from_log_weights(lw))
        assert d["ess"] == pytest.approx(1.0, rel=1e-9)

    def test_one_and_e(self):
        # weights (1, e): closed forms from the definitions.
        acc = EstimateAccumulator.from_log_weights(np.array([0.0, 1.0]))
        d = diagnostics(acc)
        e = math.e
        assert d["ess"] == pytest.approx((1 + e) ** 2 / (1 + e * e), rel=1e-12)
        assert d["kl_hat"] == pytest.approx(e / (1 + e) - math.log((1 + e) / 2), rel=1e-12)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            diagnostics(EstimateAccumulator())


class TestDecimalFormatting:
    def test_small_values(self):
        assert decimal_from_log10(math.log10(24)) == "24"
        assert decimal_from_log10(0.0) == "1"
        assert decimal_from_log10(None) == "0"

    def test_huge_value(self):
        s = decimal_from_log10(230.25)
        mant, exp = s.split("e")
        assert exp == "+230"
        assert float(mant) == pytest.approx(10**0.25, rel=1e-6)

    def test_tiny_value(self):
        s = decimal_from_log10(-40.5)
        assert s.endswith("e-41")

    def test_mantissa_rounding_rollover(self):
        # A mantissa that rounds to 10.0 must carry into the exponent.
        s = decimal_from_log10(99.9999999999)
        assert s == "1.000000e+100"


class TestCounterRng:
    def test_stream_reproducible(self):
        a = sample_uniforms(7, 123, 10)
        b = sample_uniforms(7, 123, 10)
        assert np.array_equal(a, b)

    def test_streams_distinct(self):
        assert not np.array_equal(sample_uniforms(7, 0, 10), sample_uniforms(7, 1, 10))
        assert not np.array_equal(sample_uniforms(7, 0, 10), sample_uniforms(8, 0, 10))
