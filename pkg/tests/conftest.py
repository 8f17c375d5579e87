import numpy as np
import pytest

from graph_core import DynamicNetwork, EdgeDistribution, Snapshot

A, B, C, D = 0, 1, 2, 3


@pytest.fixture
def snapshot():
    """snapshot({(0, 1): 2}, n_nodes=4, t=0)"""

    def make(edges, n_nodes=4, t=0):
        return Snapshot.from_edges(t, n_nodes, edges)

    return make


@pytest.fixture
def network():
    """network({...}, {...}, n_nodes=4): one snapshot per mapping, t = 0, 1, ..."""

    def make(*edge_maps, n_nodes=4, t0=0):
        snaps = tuple(
            Snapshot.from_edges(t0 + k, n_nodes, edges) for k, edges in enumerate(edge_maps)
        )
        return DynamicNetwork(snaps, n_nodes)

    return make


@pytest.fixture
def distribution():
    def make(probs, n_nodes=4):
        return EdgeDistribution.from_mapping(n_nodes, probs)

    return make


@pytest.fixture
def uniform_triangle():
    third = 1.0 / 3.0
    return EdgeDistribution.from_mapping(3, {(A, B): third, (A, C): third, (B, C): third})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
