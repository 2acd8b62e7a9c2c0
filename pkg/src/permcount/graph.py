"""Balanced bipartite graphs: representation, validation, file I/O, generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BipartiteGraph",
    "GraphFormatError",
    "GraphGenSpec",
    "from_dense_rows",
    "gen_appendix_b",
    "gen_complete",
    "gen_dense_random",
    "gen_fibonacci",
    "gen_sbm",
    "read_graph",
    "write_graph",
]


class GraphFormatError(ValueError):
    """Raised when a graph file or dense matrix cannot be parsed/validated."""


class BipartiteGraph:
    """A balanced bipartite graph with ``n`` vertices per side.

    Edges are pairs ``(left, right)`` with 0-based indices.  Instances are
    immutable after construction and safe to share between workers.
    """

    __slots__ = ("n", "edges", "_dense", "_adj_left", "_adj_right")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n <= 0:
            raise ValueError("n must be positive")
        edge_set = frozenset((int(u), int(v)) for u, v in edges)
        for u, v in edge_set:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edge_set)
        object.__setattr__(self, "_dense", None)
        object.__setattr__(self, "_adj_left", None)
        object.__setattr__(self, "_adj_right", None)

    def __setattr__(self, name, value):
        raise AttributeError("BipartiteGraph is immutable")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BipartiteGraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"BipartiteGraph(n={self.n}, m={len(self.edges)})"

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def dense(self) -> np.ndarray:
        """0/1 incidence matrix, shape (n, n); row = left vertex."""
        if self._dense is None:
            a = np.zeros((self.n, self.n), dtype=np.uint8)
            for u, v in self.edges:
                a[u, v] = 1
            a.setflags(write=False)
            object.__setattr__(self, "_dense", a)
        return self._dense

    def adj_left(self) -> list[list[int]]:
        """Sorted neighbor lists indexed by left vertex."""
        if self._adj_left is None:
            adj: list[list[int]] = [[] for _ in range(self.n)]
            for u, v in sorted(self.edges):
                adj[u].append(v)
            object.__setattr__(self, "_adj_left", adj)
        return self._adj_left

    def adj_right(self) -> list[list[int]]:
        """Sorted neighbor lists indexed by right vertex."""
        if self._adj_right is None:
            adj: list[list[int]] = [[] for _ in range(self.n)]
            for u, v in sorted(self.edges):
                adj[v].append(u)
            object.__setattr__(self, "_adj_right", adj)
        return self._adj_right

    def left_degrees(self) -> np.ndarray:
        return self.dense().sum(axis=1).astype(np.int64)

    def right_degrees(self) -> np.ndarray:
        return self.dense().sum(axis=0).astype(np.int64)

    def has_isolated_vertex(self) -> bool:
        return bool((self.left_degrees() == 0).any() or (self.right_degrees() == 0).any())

    def relabel(self, left_perm: Sequence[int], right_perm: Sequence[int]) -> "BipartiteGraph":
        """Graph with left vertex u renamed left_perm[u], right v renamed right_perm[v]."""
        return BipartiteGraph(
            self.n, ((left_perm[u], right_perm[v]) for u, v in self.edges)
        )


def from_dense_rows(rows: Sequence[Sequence[int]], allow_isolated: bool = False) -> BipartiteGraph:
    """Build a graph from a square 0/1 matrix.

    An all-zero row or column means no perfect matching can exist; by default
    that is rejected as an ``isolated vertex`` error.  Pass
    ``allow_isolated=True`` to build the graph anyway (the estimator then
    reports an exact zero).
    """
    n = len(rows)
    if n == 0:
        raise GraphFormatError("empty matrix")
    mat = []
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != n:
            raise GraphFormatError(f"non-square input: row {i} has {len(row)} entries, expected {n}")
        for j, x in enumerate(row):
            if x not in (0, 1):
                raise GraphFormatError(f"non-binary entry {x!r} at ({i}, {j})")
        mat.append(row)
    g = BipartiteGraph(n, ((i, j) for i in range(n) for j in range(n) if mat[i][j]))
    if not allow_isolated and g.has_isolated_vertex():
        raise GraphFormatError("isolated vertex: an all-zero row or column admits no perfect matching")
    return g


def gen_complete(n: int) -> BipartiteGraph:
    """The complete bipartite graph K_{n,n}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return BipartiteGraph(n, ((i, j) for i in range(n) for j in range(n)))


def gen_appendix_b(n: int) -> BipartiteGraph:
    """Star-plus-diagonal graph on n+1 vertices per side with exactly n+1 perfect matchings.

    Vertex 0 on each side is adjacent to everything; otherwise only the
    diagonal edges (i, i) are present.  Uniform-weight sequential sampling
    needs exponentially many samples on this family while the scaled sampler
    needs linearly many, which makes it a sharp separation test case.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    edges = {(i, i) for i in range(n + 1)}
    edges.update((0, j) for j in range(n + 1))
    edges.update((i, 0) for i in range(n + 1))
    return BipartiteGraph(n + 1, edges)


def gen_fibonacci(n: int) -> BipartiteGraph:
    """Tridiagonal graph: edge (i, j) iff |i - j| <= 1; has Fibonacci-many matchings."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return BipartiteGraph(
        n, ((i, j) for i in range(n) for j in range(n) if abs(i - j) <= 1)
    )


def dense_degree_threshold(n: int, lam: float) -> int:
    """Minimum degree ceil((1/2 + lam) * n) required of a lam-dense graph."""
    return math.ceil((0.5 + lam) * n)


def gen_dense_random(n: int, lam: float, seed: int) -> BipartiteGraph:
    """Random graph in which every degree is at least ceil((1/2 + lam) * n).

    Starts from K_{n,n} and deletes uniformly random edges whose removal keeps
    both endpoint degrees at or above the threshold, until a uniformly drawn
    target edge count is reached.  Deterministic for a fixed seed.
    """
    if not (0.0 < lam < 0.5):
        raise ValueError("lam must lie in (0, 1/2)")
    thr = dense_degree_threshold(n, lam)
    if thr > n:
        raise ValueError(f"infeasible parameters: degree threshold {thr} exceeds n={n}")
    rng = np.random.default_rng(seed)
    target = int(rng.integers(n * thr, n * n + 1))
    present = np.ones((n, n), dtype=bool)
    ldeg = np.full(n, n, dtype=np.int64)
    rdeg = np.full(n, n, dtype=np.int64)
    m = n * n
    while m > target:
        us, vs = np.nonzero(present & (ldeg[:, None] > thr) & (rdeg[None, :] > thr))
        if len(us) == 0:
            break
        k = int(rng.integers(len(us)))
        u, v = int(us[k]), int(vs[k])
        present[u, v] = False
        ldeg[u] -= 1
        rdeg[v] -= 1
        m -= 1
    return BipartiteGraph(n, zip(*np.nonzero(present)))


def gen_sbm(
    left_sizes: Sequence[int],
    right_sizes: Sequence[int],
    P: Sequence[Sequence[float]],
    seed: int,
) -> BipartiteGraph:
    """Bipartite stochastic block model.

    Vertices on each side are grouped into consecutive clusters of the given
    sizes; an edge between cluster i (left) and cluster j (right) appears
    independently with probability ``P[i][j]``.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (len(left_sizes), len(right_sizes)):
        raise ValueError(
            f"dimension mismatch: P has shape {P.shape}, expected "
            f"({len(left_sizes)}, {len(right_sizes)})"
        )
    if (P < 0).any() or (P > 1).any():
        raise ValueError("P entries must lie in [0, 1]")
    n = int(sum(left_sizes))
    if n != int(sum(right_sizes)):
        raise ValueError("left and right cluster sizes must sum to the same n")
    left_cluster = np.repeat(np.arange(len(left_sizes)), left_sizes)
    right_cluster = np.repeat(np.arange(len(right_sizes)), right_sizes)
    prob = P[np.ix_(left_cluster, right_cluster)]
    rng = np.random.default_rng(seed)
    present = rng.random((n, n)) < prob
    return BipartiteGraph(n, zip(*np.nonzero(present)))


@dataclass(frozen=True)
class GraphGenSpec:
    """Declarative description of a generated graph family.

    family: one of {"complete", "dense-random", "sbm", "appendix-b", "fibonacci"}.
    """

    family: str
    n: int = 0
    lam: float = 0.0
    left_sizes: tuple[int, ...] = ()
    right_sizes: tuple[int, ...] = ()
    P: tuple[tuple[float, ...], ...] = field(default=())
    seed: int = 0

    def generate(self) -> BipartiteGraph:
        if self.family == "complete":
            return gen_complete(self.n)
        if self.family == "appendix-b":
            return gen_appendix_b(self.n)
        if self.family == "fibonacci":
            return gen_fibonacci(self.n)
        if self.family == "dense-random":
            return gen_dense_random(self.n, self.lam, self.seed)
        if self.family == "sbm":
            return gen_sbm(self.left_sizes, self.right_sizes, self.P, self.seed)
        raise ValueError(f"unknown family {self.family!r}")


def write_graph(graph: BipartiteGraph, path, fmt: str = "edges") -> None:
    """Write a graph as an edge list ("n m" header) or dense 0/1 text."""
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "edges":
            fh.write(f"{graph.n} {graph.num_edges}\n")
            for u, v in sorted(graph.edges):
                fh.write(f"{u} {v}\n")
        elif fmt == "dense":
            fh.write(f"dense {graph.n}\n")
            for row in graph.dense():
                fh.write(" ".join(str(int(x)) for x in row) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")


def read_graph(path, allow_isolated: bool = False) -> BipartiteGraph:
    """Parse a graph file in either the edge-list or the dense text format."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise GraphFormatError(f"{path}: empty file")
    header = lines[0].split()
    if header and header[0] == "dense":
        if len(header) != 2:
            raise GraphFormatError(f"{path}: bad dense header, line 1")
        try:
            n = int(header[1])
        except ValueError:
            raise GraphFormatError(f"{path}: bad dense header, line 1") from None
        if len(lines) < n + 1:
            raise GraphFormatError(f"{path}: expected {n} matrix rows")
        rows = []
        for i in range(n):
            parts = lines[1 + i].split()
            if len(parts) != n:
                raise GraphFormatError(f"{path}: expected {n} entries, line {i + 2}")
            try:
                rows.append([int(x) for x in parts])
            except ValueError:
                raise GraphFormatError(f"{path}: non-integer entry, line {i + 2}") from None
        try:
            return from_dense_rows(rows, allow_isolated=allow_isolated)
        except GraphFormatError as exc:
            raise GraphFormatError(f"{path}: {exc}") from None
    if len(header) != 2:
        raise GraphFormatError(f"{path}: expected 'n m' header, line 1")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise GraphFormatError(f"{path}: expected 'n m' header, line 1") from None
    edges: set[tuple[int, int]] = set()
    for k in range(m):
        lineno = k + 2
        if lineno - 1 >= len(lines):
            raise GraphFormatError(f"{path}: expected {m} edges, file ends at line {len(lines)}")
        parts = lines[lineno - 1].split()
        if len(parts) != 2:
            raise GraphFormatError(f"{path}: expected 'u v', line {lineno}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"{path}: non-integer vertex, line {lineno}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"{path}: index out of range, line {lineno}")
        if (u, v) in edges:
            raise GraphFormatError(f"{path}: duplicate edge, line {lineno}")
        edges.add((u, v))
    g = BipartiteGraph(n, edges)
    if not allow_isolated and g.has_isolated_vertex():
        raise GraphFormatError(f"{path}: isolated vertex")
    return g
