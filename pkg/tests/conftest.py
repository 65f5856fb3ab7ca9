import numpy as np
import pytest

from synclouvain.graph import Graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def build_graph(n, edges):
    edges = list(edges)
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=np.float64)
    return Graph.from_edges(n, src, dst, w)


def two_triangles():
    """Two disjoint directed 3-cycles, unit weights: nodes 0-2 and 3-5."""
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0),
             (3, 4, 1.0), (4, 5, 1.0), (5, 3, 1.0)]
    return 6, edges
