import itertools

import numpy as np
import pytest

from conftest import random_graph
from permcount.graph import BipartiteGraph, gen_appendix_b, gen_complete, gen_fibonacci
from permcount.matching import (
    DirectedMatchGraph,
    extendable_edges,
    hopcroft_karp,
    maximum_matching,
)


def brute_max_matching_size(g: BipartiteGraph) -> int:
    best = 0
    edges = sorted(g.edges)
    for r in range(len(edges), 0, -1):
        for combo in itertools.combinations(edges, r):
            ls = {u for u, _ in combo}
            rs = {v for _, v in combo}
            if len(ls) == r and len(rs) == r:
                return r
    return best


def brute_extendable(g: BipartiteGraph) -> set:
    out = set()
    for perm in itertools.permutations(range(g.n)):
        if all((i, perm[i]) in g.edges for i in range(g.n)):
            out.update((i, perm[i]) for i in range(g.n))
    return out


class TestMaximumMatching:
    def test_complete(self):
        m = hopcroft_karp(gen_complete(4))
        assert m is not None and sorted(m.values()) == [0, 1, 2, 3]

    def test_no_perfect_matching(self):
        g = BipartiteGraph(2, [(0, 0), (1, 0)])
        assert hopcroft_karp(g) is None
        assert len(maximum_matching(g)) == 1

    def test_matching_is_valid(self, rng):
        for _ in range(50):
            g = random_graph(rng, int(rng.integers(1, 7)))
            m = maximum_matching(g)
            assert all((u, v) in g.edges for u, v in m.items())
            assert len(set(m.values())) == len(m)

    def test_against_brute_force(self, rng):
        for _ in range(200):
            g = random_graph(rng, int(rng.integers(1, 6)))
            assert len(maximum_matching(g)) == brute_max_matching_size(g)


class TestExtendableEdges:
    def test_path_pattern(self):
        # 0-0, 0-1, 1-1: edge (0,1) lies on no perfect matching.
        g = BipartiteGraph(2, [(0, 0), (0, 1), (1, 1)])
        assert extendable_edges(g) == {(0, 0), (1, 1)}

    def test_complete_all_extendable(self):
        g = gen_complete(3)
        assert extendable_edges(g) == g.edges

    def test_against_brute_force(self, rng):
        checked = 0
        while checked < 200:
            g = random_graph(rng, int(rng.integers(1, 6)))
            if hopcroft_karp(g) is None:
                continue
            assert extendable_edges(g) == brute_extendable(g)
            checked += 1

    def test_requires_perfect_matching(self):
        with pytest.raises(ValueError):
            extendable_edges(BipartiteGraph(2, [(0, 0), (1, 0)]))


class TestDirectedMatchGraph:
    def test_rejects_invalid_matching(self):
        g = gen_complete(2)
        with pytest.raises(ValueError):
            DirectedMatchGraph(g, {0: 0})
        with pytest.raises(ValueError):
            DirectedMatchGraph(g, {0: 0, 1: 0})
        g2 = BipartiteGraph(2, [(0, 0), (1, 1)])
        with pytest.raises(ValueError, match="non-edge"):
            DirectedMatchGraph(g2, {0: 1, 1: 0})

    def test_identity_pattern_forced(self):
        g = BipartiteGraph(3, [(0, 0), (1, 1), (2, 2)])
        s = DirectedMatchGraph(g, {0: 0, 1: 1, 2: 2})
        for x in range(3):
            assert s.extendable_neighbors(x) == [x]

    def test_neighbors_ascending_and_alive(self):
        g = gen_complete(3)
        s = DirectedMatchGraph(g, {0: 0, 1: 1, 2: 2})
        assert s.extendable_neighbors(0) == [0, 1, 2]
        s.commit_edge(0, 1)
        assert s.extendable_neighbors(1) == [0, 2]
        with pytest.raises(ValueError, match="dead"):
            s.extendable_neighbors(0)

    def test_commit_rotates_to_valid_matching(self, rng):
        for _ in range(100):
            g = random_graph(rng, int(rng.integers(2, 6)))
            pm = hopcroft_karp(g)
            if pm is None:
                continue
            s = DirectedMatchGraph(g, pm)
            order = list(rng.permutation(g.n))
            for x in order:
                nbrs = s.extendable_neighbors(x)
                assert nbrs, "extendable edge disappeared mid-sample"
                y = int(nbrs[rng.integers(len(nbrs))])
                s.commit_edge(x, y)
                carried = s.carried_matching()
                # The carried matching stays a perfect matching of the residual.
                assert sorted(carried) == sorted(
                    u for u in range(g.n) if s.alive_l[u]
                )
                assert all((u, v) in g.edges for u, v in carried.items())
                assert len(set(carried.values())) == len(carried)

    def test_commit_rejects_non_extendable(self):
        g = BipartiteGraph(2, [(0, 0), (0, 1), (1, 1)])
        s = DirectedMatchGraph(g, {0: 0, 1: 1})
        with pytest.raises(ValueError, match="not extendable"):
            s.commit_edge(0, 1)

    def test_appendix_b_neighbors(self):
        # In the star-plus-diagonal graph every edge is on some matching.
        n = 4
        g = gen_appendix_b(n)
        pm = hopcroft_karp(g)
        s = DirectedMatchGraph(g, pm)
        assert s.extendable_neighbors(0) == list(range(n + 1))
        for x in range(1, n + 1):
            assert s.extendable_neighbors(x) == [0, x]

    def test_fibonacci_scc_split_after_commit(self):
        g = gen_fibonacci(4)
        pm = hopcroft_karp(g)
        s = DirectedMatchGraph(g, pm)
        s.commit_edge(1, 2)
        # Committing 1-2 forces the rest: 3 must take 3, so 2 must take 1 and
        # 0 must take 0.
        assert s.extendable_neighbors(2) == [1]
        assert s.extendable_neighbors(3) == [3]
        assert s.extendable_neighbors(0) == [0]
