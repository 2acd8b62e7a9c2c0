"""Perfect matchings, extendable-edge queries, and incremental sampler state.

The sampler never commits an edge that cannot be completed to a perfect
matching.  Extendability is decided through the directed match-graph: orient
every graph edge right-to-left, add a perfect matching oriented left-to-right,
and an edge is extendable exactly when its endpoints share a strongly
connected component.
"""

from __future__ import annotations

from collections import deque
from typing import Optional

import numpy as np

from permcount.graph import BipartiteGraph

__all__ = [
    "DirectedMatchGraph",
    "extendable_edges",
    "hopcroft_karp",
    "maximum_matching",
]


def maximum_matching(graph: BipartiteGraph) -> dict[int, int]:
    """Maximum matching (left -> right) via Hopcroft-Karp."""
    n = graph.n
    adj = graph.adj_left()
    INF = n + 1
    match_l = [-1] * n
    match_r = [-1] * n
    dist = [0] * n

    def bfs() -> bool:
        q = deque()
        for u in range(n):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF
        return False

    import sys

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 2 * n + 100))
    try:
        while bfs():
            for u in range(n):
                if match_l[u] == -1:
                    dfs(u)
    finally:
        sys.setrecursionlimit(old_limit)
    return {u: v for u, v in enumerate(match_l) if v != -1}


def hopcroft_karp(graph: BipartiteGraph) -> Optional[dict[int, int]]:
    """A perfect matching (left -> right), or None if none exists."""
    m = maximum_matching(graph)
    return m if len(m) == graph.n else None


class DirectedMatchGraph:
    """Mutable sampler state over the directed match-graph.

    Holds the current carried matching, live-vertex flags, and SCC labels.
    Left vertex i is node i, right vertex j is node n + j.  Single-owner
    mutable: each sampling worker builds its own instance.
    """

    def __init__(self, graph: BipartiteGraph, perfect_matching: dict[int, int]):
        n = graph.n
        self.graph = graph
        self.n = n
        self.adj_left = graph.adj_left()
        self.adj_right = graph.adj_right()
        self._validate_matching(perfect_matching)
        self.match_l = np.array([perfect_matching[u] for u in range(n)], dtype=np.int64)
        self.match_r = np.full(n, -1, dtype=np.int64)
        for u in range(n):
            self.match_r[self.match_l[u]] = u
        self.alive_l = np.ones(n, dtype=bool)
        self.alive_r = np.ones(n, dtype=bool)
        self.comp = np.full(2 * n, -1, dtype=np.int64)
        self.log_prob = 0.0
        self._recompute_scc()

    def _validate_matching(self, matching: dict[int, int]) -> None:
        n = self.n
        if sorted(matching.keys()) != list(range(n)):
            raise ValueError("matching must cover every left vertex")
        if sorted(matching.values()) != list(range(n)):
            raise ValueError("matching must be injective onto the right side")
        for u, v in matching.items():
            if (u, v) not in self.graph.edges:
                raise ValueError(f"matching uses non-edge ({u}, {v})")

    def _recompute_scc(self) -> None:
        """Iterative Tarjan over live vertices; labels stored in self.comp."""
        n = self.n
        comp = self.comp
        comp.fill(-1)
        index = np.full(2 * n, -1, dtype=np.int64)
        low = np.zeros(2 * n, dtype=np.int64)
        onstack = np.zeros(2 * n, dtype=bool)
        tstack: list[int] = []
        counter = 0
        ncomp = 0

        def successors(v: int) -> list[int]:
            if v < n:
                return [n + int(self.match_l[v])]
            return [u for u in self.adj_right[v - n] if self.alive_l[u]]

        for root in range(2 * n):
            if root < n:
                if not self.alive_l[root]:
                    continue
            elif not self.alive_r[root - n]:
                continue
            if index[root] != -1:
                continue
            work = [(root, 0)]
            while work:
                v, pos = work.pop()
                if pos == 0:
                    index[v] = low[v] = counter
                    counter += 1
                    tstack.append(v)
                    onstack[v] = True
                recurse = False
                succ = successors(v)
                for i in range(pos, len(succ)):
                    w = succ[i]
                    if index[w] == -1:
                        work.append((v, i + 1))
                        work.append((w, 0))
                        recurse = True
                        break
                    if onstack[w]:
                        low[v] = min(low[v], index[w])
                if recurse:
                    continue
                if low[v] == index[v]:
                    while True:
                        w = tstack.pop()
                        onstack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])

    def extendable_neighbors(self, left_vertex: int) -> list[int]:
        """Live right neighbors of a live left vertex sharing its SCC, ascending."""
        if not self.alive_l[left_vertex]:
            raise ValueError(f"left vertex {left_vertex} is dead")
        c = self.comp[left_vertex]
        n = self.n
        return [
            v
            for v in self.adj_left[left_vertex]
            if self.alive_r[v] and self.comp[n + v] == c
        ]

    def _find_cycle_path(self, x: int, target: int) -> list[int]:
        """Left vertices on a directed path x -> ... -> target inside x's SCC."""
        c = self.comp[x]
        n = self.n
        visited = np.zeros(n, dtype=bool)
        visited[x] = True
        stack_u = [x]
        stack_pos = [0]
        while stack_u:
            u = stack_u[-1]
            y = int(self.match_l[u])
            nbrs = self.adj_right[y]
            pos = stack_pos[-1]
            advanced = False
            while pos < len(nbrs):
                w = nbrs[pos]
                pos += 1
                if self.alive_l[w] and not visited[w] and self.comp[w] == c:
                    visited[w] = True
                    stack_pos[-1] = pos
                    if w == target:
                        return stack_u + [w]
                    stack_u.append(w)
                    stack_pos.append(0)
                    advanced = True
                    break
            if not advanced:
                stack_u.pop()
                stack_pos.pop()
        raise AssertionError("no alternating cycle found for an extendable edge")

    def commit_edge(self, left_vertex: int, right_vertex: int) -> None:
        """Fix (left_vertex, right_vertex) into the sample and retire both endpoints.

        If the edge is not in the carried matching, an alternating cycle
        through it is found and the matching is rotated along it first.
        """
        x, y = left_vertex, right_vertex
        if y not in self.extendable_neighbors(x):
            raise ValueError(f"edge ({x}, {y}) is not extendable")
        if self.match_l[x] != y:
            target = int(self.match_r[y])
            path = self._find_cycle_path(x, target)
            # Rotate: each path vertex after x takes its predecessor's partner.
            for j in range(len(path) - 1, 0, -1):
                ym = int(self.match_l[path[j - 1]])
                self.match_l[path[j]] = ym
                self.match_r[ym] = path[j]
            self.match_l[x] = y
            self.match_r[y] = x
        self.alive_l[x] = False
        self.alive_r[y] = False
        self._recompute_scc()

    def carried_matching(self) -> dict[int, int]:
        """Current perfect matching of the live residual graph."""
        return {
            u: int(self.match_l[u]) for u in range(self.n) if self.alive_l[u]
        }


def init_sampler_state(graph: BipartiteGraph, perfect_matching: dict[int, int]) -> DirectedMatchGraph:
    return DirectedMatchGraph(graph, perfect_matching)


def extendable_edges(
    graph: BipartiteGraph, perfect_matching: Optional[dict[int, int]] = None
) -> set[tuple[int, int]]:
    """Edges lying on at least one perfect matching of ``graph``.

    A perfect matching may be supplied to skip recomputing one.
    """
    if perfect_matching is None:
        perfect_matching = hopcroft_karp(graph)
        if perfect_matching is None:
            raise ValueError("graph has no perfect matching")
    state = DirectedMatchGraph(graph, perfect_matching)
    n = graph.n
    return {
        (u, v) for u, v in graph.edges if state.comp[u] == state.comp[n + v]
    }
