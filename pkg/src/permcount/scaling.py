"""Doubly stochastic scaling of 0/1 incidence matrices by Sinkhorn iteration.

Convergence on a 0/1 matrix requires total support: every positive entry must
lie on a permutation with positive product.  Pruning edges that sit on no
perfect matching establishes exactly that, so the pipeline is always
prune-then-scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from permcount.graph import BipartiteGraph
from permcount.matching import extendable_edges, hopcroft_karp

__all__ = ["ScaledMatrix", "SinkhornError", "prune_non_extendable", "sinkhorn", "uniform_weights"]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 100_000


class SinkhornError(RuntimeError):
    """Raised when the scaling iteration fails to reach the tolerance."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"Sinkhorn did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class ScaledMatrix:
    """Edge-weight matrix with its row/column scalers and convergence metadata.

    ``q[i, j] = alpha[i] * a[i, j] * beta[j]`` where ``a`` is the 0/1
    incidence.  ``stochastic`` is False for the unnormalized uniform-weight
    baseline, in which case ``residual`` is not meaningful.
    """

    q: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    iterations: int
    residual: float
    stochastic: bool = True

    def __post_init__(self):
        self.q.setflags(write=False)
        self.alpha.setflags(write=False)
        self.beta.setflags(write=False)


def prune_non_extendable(
    graph: BipartiteGraph, perfect_matching: Optional[dict[int, int]] = None
) -> BipartiteGraph:
    """Drop every edge that lies on no perfect matching.

    The permanent is unchanged; the result has total support, which makes
    Sinkhorn iteration on its incidence matrix convergent.
    """
    if perfect_matching is None:
        perfect_matching = hopcroft_karp(graph)
        if perfect_matching is None:
            raise ValueError("graph has no perfect matching")
    keep = extendable_edges(graph, perfect_matching)
    if keep == graph.edges:
        return graph
    return BipartiteGraph(graph.n, keep)


def sinkhorn(
    graph: BipartiteGraph,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> ScaledMatrix:
    """Doubly stochastic scaling of the graph's incidence matrix.

    Alternates row and column normalization starting from the 0/1 incidence.
    The residual is the L-infinity deviation of all row and column sums from
    one.  The input must have been pruned of non-extendable edges (see
    :func:`prune_non_extendable`); without total support the iteration cannot
    converge and a :class:`SinkhornError` is raised at ``max_iters``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = graph.dense().astype(np.float64)
    if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
        raise ValueError("graph has an isolated vertex; no perfect matching exists")
    n = graph.n
    alpha = np.ones(n)
    beta = np.ones(n)
    q = a.copy()
    iterations = 0
    residual = np.inf
    while iterations < max_iters:
        iterations += 1
        row_sums = q.sum(axis=1)
        alpha /= row_sums
        q /= row_sums[:, None]
        col_sums = q.sum(axis=0)
        beta /= col_sums
        q /= col_sums[None, :]
        residual = float(
            max(np.abs(q.sum(axis=1) - 1.0).max(), np.abs(q.sum(axis=0) - 1.0).max())
        )
        if residual <= tol:
            break
    else:
        raise SinkhornError(iterations, residual)
    return ScaledMatrix(
        q=q, alpha=alpha, beta=beta, iterations=iterations, residual=residual
    )


def uniform_weights(graph: BipartiteGraph) -> ScaledMatrix:
    """Weight 1 on every edge: the unscaled sequential-sampling baseline.

    Row sums are intentionally not normalized; the sampler renormalizes over
    extendable neighbors at every step anyway.
    """
    a = graph.dense().astype(np.float64)
    n = graph.n
    residual = float(np.abs(a.sum(axis=1) - 1.0).max()) if n else 0.0
    residual = max(residual, float(np.abs(a.sum(axis=0) - 1.0).max()))
    return ScaledMatrix(
        q=a,
        alpha=np.ones(n),
        beta=np.ones(n),
        iterations=0,
        residual=residual,
        stochastic=False,
    )
