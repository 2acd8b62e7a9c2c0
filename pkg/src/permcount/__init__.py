"""Estimating permanents of 0/1 matrices by sequential importance sampling.

The package is organised around a small pipeline: build a balanced bipartite
graph (`permcount.graph`), prune edges that lie on no perfect matching and
scale the incidence matrix to doubly stochastic form (`permcount.scaling`),
then sample perfect matchings edge by edge with known proposal probabilities
(`permcount.sampling`).  Exact oracles live in `permcount.exact`; the three
experiment harnesses are `permcount.latin`, `permcount.cards`, and
`permcount.sbm`.
"""

from permcount.graph import (
    BipartiteGraph,
    GraphGenSpec,
    from_dense_rows,
    gen_appendix_b,
    gen_complete,
    gen_dense_random,
    gen_fibonacci,
    gen_sbm,
    read_graph,
    write_graph,
)
from permcount.matching import (
    DirectedMatchGraph,
    extendable_edges,
    hopcroft_karp,
)
from permcount.scaling import ScaledMatrix, prune_non_extendable, sinkhorn, uniform_weights
from permcount.sampling import (
    EstimateAccumulator,
    EstimateReport,
    WeightedSample,
    diagnostics,
    edge_marginals,
    estimate_count,
    estimate_functional,
    sample_matching,
)
from permcount.exact import (
    ZeroBlockSpec,
    exhaustive_sis_expectation,
    permanent_brute,
    permanent_ryser,
    zero_block_permanent,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph",
    "DirectedMatchGraph",
    "EstimateAccumulator",
    "EstimateReport",
    "GraphGenSpec",
    "ScaledMatrix",
    "WeightedSample",
    "ZeroBlockSpec",
    "diagnostics",
    "edge_marginals",
    "estimate_count",
    "estimate_functional",
    "exhaustive_sis_expectation",
    "extendable_edges",
    "from_dense_rows",
    "gen_appendix_b",
    "gen_complete",
    "gen_dense_random",
    "gen_fibonacci",
    "gen_sbm",
    "hopcroft_karp",
    "permanent_brute",
    "permanent_ryser",
    "prune_non_extendable",
    "read_graph",
    "sample_matching",
    "sinkhorn",
    "uniform_weights",
    "write_graph",
    "zero_block_permanent",
]
