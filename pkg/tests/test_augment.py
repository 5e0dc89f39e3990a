import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glcc.augment import STRATEGIES, AugmentationSpec, augment
from glcc.errors import ParameterError
from glcc.graph import GraphDataset, make_graph, validate_dataset

from conftest import random_graph


def edge_set(g):
    return set(map(tuple, g.edges.tolist()))


@pytest.mark.parametrize("strategy", STRATEGIES + ("random_choice",))
def test_zero_ratio_is_identity(strategy, rng):
    g = random_graph(rng, n=10)
    out = augment(g, AugmentationSpec(strategy, 0.0), rng)
    assert out.same_as(g)


def test_node_drop_count(rng):
    g = random_graph(rng, n=20)
    out = augment(g, AugmentationSpec("node_drop", 0.1), rng)
    assert out.node_count == 18


def test_edge_perturb_symmetric_difference(rng):
    g = random_graph(rng, n=15, p=0.4)
    m = math.floor(0.1 * g.num_edges)
    assert m > 0
    out = augment(g, AugmentationSpec("edge_perturb", 0.1), rng)
    assert out.num_edges == g.num_edges
    assert len(edge_set(g) ^ edge_set(out)) == 2 * m


def test_edge_perturb_dense_graph(rng):
    iu, ju = np.triu_indices(8, 1)
    edges = np.stack([iu, ju], 1)[:-3]  # 25 of 28 pairs
    g = make_graph(8, edges, np.ones((8, 1)))
    out = augment(g, AugmentationSpec("edge_perturb", 0.1), rng)
    assert out.num_edges == g.num_edges
    assert len(edge_set(g) ^ edge_set(out)) == 4


def test_subgraph_size_and_connectivity(rng):
    # path graph: a grown subgraph of a connected graph stays connected
    g = make_graph(10, [(i, i + 1) for i in range(9)], np.arange(10.0))
    out = augment(g, AugmentationSpec("subgraph", 0.3), rng)
    assert out.node_count == 7
    assert out.num_edges == 6
    x = out.node_features.ravel()
    assert np.all(np.diff(x) == 1.0)


def test_attr_mask_zeroes_rows(rng):
    g = make_graph(10, [(0, 1)], np.ones((10, 2)))
    out = augment(g, AugmentationSpec("attr_mask", 0.2), rng)
    assert int((out.node_features == 0).all(axis=1).sum()) == 2
    assert out.edges.tolist() == g.edges.tolist()


def test_node_drop_never_empties(rng):
    g = make_graph(1, [], np.ones((1, 1)))
    for s in STRATEGIES:
        assert augment(g, AugmentationSpec(s, 0.99), rng).node_count == 1


def test_bad_ratio():
    with pytest.raises(ParameterError):
        AugmentationSpec("node_drop", 1.0)
    with pytest.raises(ParameterError):
        AugmentationSpec("shuffle", 0.1)


def test_random_choice_draws_all_strategies():
    rng = np.random.default_rng(0)
    seen = {AugmentationSpec().concrete(rng).strategy for _ in range(200)}
    assert seen == set(STRATEGIES)


@given(
    seed=st.integers(0, 2**31),
    n=st.integers(1, 15),
    ratio=st.floats(0.0, 0.95),
    strategy=st.sampled_from(STRATEGIES + ("random_choice",)),
)
@settings(max_examples=150, deadline=None)
def test_output_valid_and_deterministic(seed, n, ratio, strategy):
    g = random_graph(np.random.default_rng(seed), n=n, label=1)
    spec = AugmentationSpec(strategy, ratio)
    a = augment(g, spec, np.random.default_rng(seed))
    b = augment(g, spec, np.random.default_rng(seed))
    assert a.same_as(b)
    assert a.node_count >= 1
    assert a.label == 1
    assert validate_dataset(GraphDataset([a], 2)) == []
