import numpy as np
import pytest

from permcount.graph import BipartiteGraph


def random_graph(rng: np.random.Generator, n: int, p: float = 0.5) -> BipartiteGraph:
    """Random incidence pattern; may lack a perfect matching or have isolated vertices."""
    m = rng.random((n, n)) < p
    return BipartiteGraph(n, zip(*np.nonzero(m))) if m.any() else BipartiteGraph(n, [])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
