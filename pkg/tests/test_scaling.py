import numpy as np
import pytest

from conftest import random_graph
from permcount.graph import (
    BipartiteGraph,
    dense_degree_threshold,
    gen_complete,
    gen_dense_random,
    gen_fibonacci,
)
from permcount.matching import hopcroft_karp
from permcount.scaling import (
    ScaledMatrix,
    SinkhornError,
    prune_non_extendable,
    sinkhorn,
    uniform_weights,
)


class TestPrune:
    def test_identity_on_total_support(self):
        g = gen_complete(3)
        assert prune_non_extendable(g) is g

    def test_drops_dead_edge(self):
        g = BipartiteGraph(2, [(0, 0), (0, 1), (1, 1)])
        assert prune_non_extendable(g).edges == {(0, 0), (1, 1)}

    def test_idempotent(self, rng):
        for _ in range(30):
            g = random_graph(rng, int(rng.integers(2, 7)))
            if hopcroft_karp(g) is None:
                continue
            p = prune_non_extendable(g)
            assert prune_non_extendable(p) is p

    def test_requires_perfect_matching(self):
        with pytest.raises(ValueError):
            prune_non_extendable(BipartiteGraph(2, [(0, 0), (1, 0)]))


class TestSinkhorn:
    def test_complete_one_iteration(self):
        s = sinkhorn(gen_complete(5))
        assert s.iterations == 1
        assert np.allclose(s.q, 1 / 5)
        assert s.residual <= 1e-10

    def test_regular_graph_uniform(self):
        # 2-regular cycle graph: scaling is exactly A/2 after one iteration.
        n = 6
        g = BipartiteGraph(n, [(i, i) for i in range(n)] + [(i, (i + 1) % n) for i in range(n)])
        s = sinkhorn(g)
        assert s.iterations == 1
        assert np.allclose(s.q[s.q > 0], 0.5)

    def test_row_col_sums(self, rng):
        for _ in range(20):
            g = random_graph(rng, int(rng.integers(2, 8)))
            if hopcroft_karp(g) is None:
                continue
            s = sinkhorn(prune_non_extendable(g))
            assert np.abs(s.q.sum(axis=0) - 1).max() <= 1e-10 * 2
            assert np.abs(s.q.sum(axis=1) - 1).max() <= 1e-10 * 2

    def test_scaler_reconstruction(self, rng):
        g = prune_non_extendable(random_graph(rng, 6, 0.7))
        s = sinkhorn(g)
        a = g.dense().astype(float)
        assert np.allclose(s.q, s.alpha[:, None] * a * s.beta[None, :])

    def test_zero_pattern_preserved(self):
        g = prune_non_extendable(gen_fibonacci(5))
        s = sinkhorn(g)
        assert np.array_equal(s.q > 0, g.dense() > 0)

    def test_permutation_equivariance(self, rng):
        g = prune_non_extendable(random_graph(rng, 6, 0.7))
        lp = list(rng.permutation(6))
        rp = list(rng.permutation(6))
        s = sinkhorn(g)
        s2 = sinkhorn(g.relabel(lp, rp))
        expect = np.zeros((6, 6))
        for u in range(6):
            for v in range(6):
                expect[lp[u], rp[v]] = s.q[u, v]
        assert np.allclose(s2.q, expect, atol=1e-9)

    def test_diverges_without_total_support(self):
        g = BipartiteGraph(2, [(0, 0), (0, 1), (1, 1)])
        with pytest.raises(SinkhornError) as exc:
            sinkhorn(g, max_iters=500)
        assert exc.value.iterations == 500
        assert exc.value.residual > 1e-10

    def test_rejects_isolated(self):
        with pytest.raises(ValueError):
            sinkhorn(BipartiteGraph(2, [(0, 0), (1, 0)]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            sinkhorn(gen_complete(2), tol=0.0)

    def test_dense_entry_bound(self):
        # Every scaled entry of a lam-dense graph is at most 1/(2*lam*n).
        for lam in (0.1, 0.2, 0.3):
            for seed in (0, 1):
                n = 40
                g = gen_dense_random(n, lam, seed)
                assert g.left_degrees().min() >= dense_degree_threshold(n, lam)
                s = sinkhorn(prune_non_extendable(g))
                assert s.q.max() <= 1 / (2 * lam * n) + 1e-6


class TestUniformWeights:
    def test_incidence_weights(self):
        g = gen_fibonacci(4)
        w = uniform_weights(g)
        assert not w.stochastic
        assert np.array_equal(w.q, g.dense().astype(float))
        assert w.iterations == 0

    def test_read_only(self):
        w = uniform_weights(gen_complete(2))
        with pytest.raises(ValueError):
            w.q[0, 0] = 5.0
