"""Exact permanent oracles and the exhaustive sampler-expectation check.

Everything here is arbitrary-precision: factorials overflow 64-bit integers
at n = 21 and the card-guessing and Latin workloads go well past that.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from permcount.graph import BipartiteGraph
from permcount.matching import DirectedMatchGraph, hopcroft_karp
from permcount.scaling import ScaledMatrix

__all__ = [
    "ZeroBlockSpec",
    "exhaustive_sis_expectation",
    "parse_zero_block",
    "permanent_brute",
    "permanent_ryser",
    "zero_block_matrix",
    "zero_block_permanent",
]

MatrixLike = Union[BipartiteGraph, Sequence[Sequence[int]], np.ndarray]


def _as_matrix(m: MatrixLike) -> np.ndarray:
    if isinstance(m, BipartiteGraph):
        return m.dense()
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return a


def permanent_brute(matrix: MatrixLike, max_n: int = 12) -> int:
    """Permanent of a 0/1 matrix by depth-first enumeration over rows.

    Branches only on 1-entries, so sparse matrices cost far less than n!.
    """
    a = _as_matrix(matrix)
    n = a.shape[0]
    if n > max_n:
        raise ValueError(f"n={n} too large for brute-force enumeration (max {max_n})")
    rows = [np.flatnonzero(a[i]) for i in range(n)]

    def count(i: int, used: int) -> int:
        if i == n:
            return 1
        total = 0
        for j in rows[i]:
            bit = 1 << int(j)
            if not used & bit:
                total += count(i + 1, used | bit)
        return total

    return count(0, 0)


def permanent_ryser(matrix: MatrixLike, max_n: int = 30) -> int:
    """Permanent via Ryser's inclusion-exclusion with Gray-code column sums."""
    a = _as_matrix(matrix)
    n = a.shape[0]
    if n > max_n:
        raise ValueError(f"n={n} too large for Ryser (max {max_n})")
    rows = [[int(x) for x in a[i]] for i in range(n)]
    sums = [0] * n
    total = 0
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ prev
        j = changed.bit_length() - 1
        sign = 1 if gray & changed else -1
        for i in range(n):
            sums[i] += sign * rows[i][j]
        prev = gray
        prod = 1
        for s in sums:
            if s == 0:
                prod = 0
                break
            prod *= s
        if prod:
            bits = bin(gray).count("1")
            total += prod if (n - bits) % 2 == 0 else -prod
    return total


@dataclass(frozen=True)
class ZeroBlockSpec:
    """An n-by-n all-ones matrix with diagonal all-zero blocks of sizes a_i-by-b_i."""

    a: tuple[int, ...]
    b: tuple[int, ...]
    n: int

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        if any(x < 0 for x in self.a) or any(x < 0 for x in self.b):
            raise ValueError("block sizes must be nonnegative")
        if sum(self.a) > self.n or sum(self.b) > self.n:
            raise ValueError("blocks do not fit on the diagonal")

    @property
    def r(self) -> int:
        return len(self.a)


def parse_zero_block(text: str) -> ZeroBlockSpec:
    """Parse "a1,b1;a2,b2;...;n" into a :class:`ZeroBlockSpec`."""
    parts = [p.strip() for p in text.split(";") if p.strip()]
    if not parts:
        raise ValueError("empty zero-block spec")
    try:
        n = int(parts[-1])
    except ValueError:
        raise ValueError(f"last segment must be the dimension n, got {parts[-1]!r}") from None
    a, b = [], []
    for seg in parts[:-1]:
        pieces = seg.split(",")
        if len(pieces) != 2:
            raise ValueError(f"expected 'a,b' segment, got {seg!r}")
        a.append(int(pieces[0]))
        b.append(int(pieces[1]))
    return ZeroBlockSpec(tuple(a), tuple(b), n)


def zero_block_matrix(spec: ZeroBlockSpec) -> np.ndarray:
    """Materialize the 0/1 matrix described by ``spec`` (for cross-checks)."""
    m = np.ones((spec.n, spec.n), dtype=np.uint8)
    r0 = c0 = 0
    for ai, bi in zip(spec.a, spec.b):
        m[r0 : r0 + ai, c0 : c0 + bi] = 0
        r0 += ai
        c0 += bi
    return m


def zero_block_permanent(spec: ZeroBlockSpec) -> int:
    """Exact permanent of a zero-blocked matrix in O(n^2) big-integer operations.

    Counts placements of j non-attacking zeros by a rolling-row recursion over
    blocks, then applies inclusion-exclusion against (n - j)! placements of
    the remaining free cells.
    """
    n = spec.n
    # Binomials C(i, k) for i up to the tallest block, by Pascal's rule.
    max_a = max(spec.a, default=0)
    pascal: list[list[int]] = [[1]]
    for i in range(1, max_a + 1):
        prev = pascal[-1]
        row = [1] + [prev[k - 1] + prev[k] for k in range(1, i)] + [1]
        pascal.append(row)

    f = [0] * (n + 1)
    f[0] = 1
    jmax = 0
    for ai, bi in zip(spec.a, spec.b):
        qi = min(ai, bi)
        if qi == 0:
            continue
        # Falling factorials b_i! / (b_i - k)! for k = 0..q_i.
        ff = [1] * (qi + 1)
        for k in range(1, qi + 1):
            ff[k] = ff[k - 1] * (bi - k + 1)
        new_jmax = min(jmax + qi, n)
        g = [0] * (n + 1)
        for j in range(new_jmax + 1):
            acc = 0
            for k in range(min(qi, j) + 1):
                fj = f[j - k]
                if fj:
                    acc += fj * pascal[ai][k] * ff[k]
            g[j] = acc
        f = g
        jmax = new_jmax

    total = 0
    fact = math.factorial(n)
    for j in range(jmax + 1):
        if f[j]:
            total += (-1) ** j * fact * f[j]
        if j < n:
            fact //= n - j
    return total


def _residual_has_matching(
    adj: list[list[int]], left_alive: list[int], right_alive_mask: int
) -> bool:
    """Whether every listed left vertex can be matched into the unmasked rights."""

    def extend(i: int, used: int) -> bool:
        if i == len(left_alive):
            return True
        for j in adj[left_alive[i]]:
            bit = 1 << j
            if right_alive_mask & bit and not used & bit:
                if extend(i + 1, used | bit):
                    return True
        return False

    return extend(0, 0)


def _brute_extendable(
    adj: list[list[int]], x: int, left_rest: list[int], right_mask: int
) -> list[int]:
    """Neighbors y of x such that (x, y) extends to a perfect matching; by enumeration."""
    out = []
    for y in adj[x]:
        bit = 1 << y
        if right_mask & bit and _residual_has_matching(adj, left_rest, right_mask & ~bit):
            out.append(y)
    return out


def exhaustive_sis_expectation(
    graph: BipartiteGraph, weights: ScaledMatrix, max_n: int = 4
) -> float:
    """Exact expectation of the sequential sampler's count estimator.

    Enumerates every visit order of the left vertices and every choice
    sequence.  Path probabilities come from an independent brute-force
    extendability oracle; the inverse-probability weight of each leaf is taken
    from the production sampler state replayed along the same path.  The sum
    equals the permanent exactly when the sampler's support and probabilities
    are correct.
    """
    n = graph.n
    if n > max_n:
        raise ValueError(f"n={n} too large for exhaustive enumeration (max {max_n})")
    pm = hopcroft_karp(graph)
    if pm is None:
        return 0.0
    adj = graph.adj_left()
    q = weights.q
    full_mask = (1 << n) - 1
    total = 0.0

    paths: list[tuple[tuple[int, ...], float]] = []

    def walk(order, depth, right_mask, chosen, p_true):
        if depth == n:
            paths.append((tuple(chosen), p_true))
            return
        x = order[depth]
        rest = [order[i] for i in range(depth + 1, n)]
        options = _brute_extendable(adj, x, rest, right_mask)
        if not options:
            return
        denom = sum(q[x, y] for y in options)
        for y in options:
            chosen.append(y)
            walk(order, depth + 1, right_mask & ~(1 << y), chosen, p_true * q[x, y] / denom)
            chosen.pop()

    for order in itertools.permutations(range(n)):
        paths.clear()
        walk(order, 0, full_mask, [], 1.0)
        for chosen, p_true in paths:
            # Replay through the production state machine for its probability.
            state = DirectedMatchGraph(graph, pm)
            p_rep = 1.0
            ok = True
            for x, y in zip(order, chosen):
                nbrs = state.extendable_neighbors(x)
                if y not in nbrs:
                    ok = False
                    break
                p_rep *= q[x, y] / sum(q[x, yy] for yy in nbrs)
                state.commit_edge(x, y)
            if ok:
                total += p_true / p_rep
            # A path the sampler cannot follow contributes nothing: its mass
            # is lost, which the permanent comparison then exposes.
    return total / math.factorial(n)
