import numpy as np
import pytest

from models.basis import BasisSpec
from models.dataset import Dataset, Support
from models.errors import DimensionMismatchError, DomainError, EmptyDatasetError
from models.graph import Graph
from models.params import (
    BlockLayout,
    ParamBlocks,
    edge_set_of,
    embed_truncation,
    group_norms,
    penalty,
    truncation_index,
)


def test_graph_normalizes_pairs():
    g = Graph.from_edges(4, [(2, 1), (0, 3)])
    assert sorted(g.edges) == [(0, 3), (1, 2)]
    assert (1, 2) in g and (2, 1) in g
    assert len(g) == 2


@pytest.mark.parametrize("edge", [(1, 1), (0, 4), (-1, 2)])
def test_graph_rejects_bad_edges(edge):
    with pytest.raises(ValueError):
        Graph.from_edges(4, [edge])


def test_graph_degrees_and_adjacency():
    star = Graph.from_edges(5, [(0, j) for j in range(1, 5)])
    assert star.max_degree == 4
    assert star.degree(3) == 1
    assert Graph.from_adjacency(star.adjacency()) == star
    assert star.to_networkx().number_of_edges() == 4


def test_basis_dimensions():
    g = BasisSpec.gaussian()
    assert (g.vertex_dim, g.edge_dim, g.edge_weight) == (1, 1, 2.0)
    leg = BasisSpec.legendre(3, 2)
    assert (leg.vertex_dim, leg.edge_dim, leg.edge_weight) == (3, 4, 1.0)
    assert leg.column_dim(5) == 3 + 4 * 4
    assert BasisSpec.from_dict(leg.to_dict()) == leg
    with pytest.raises(ValueError):
        BasisSpec("legendre", 2, None)
    with pytest.raises(ValueError):
        BasisSpec("gaussian", 1, 1)


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset(np.array([[0.5, 1.2]]), Support.UNIT_CUBE)
    with pytest.raises(DomainError):
        Dataset(np.array([[np.nan, 0.0]]))
    with pytest.raises(EmptyDatasetError):
        Dataset(np.zeros((0, 3))).standardize()


def test_dataset_standardize(rng):
    data = Dataset(3.0 + 2.0 * rng.standard_normal((200, 3))).standardize()
    np.testing.assert_allclose(data.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(data.values.var(axis=0), 1.0, atol=1e-12)
    assert data.standardized


def test_dataset_split_sizes(rng):
    train, test = Dataset(rng.standard_normal((50, 2))).split(10, seed=0)
    assert (train.n, test.n) == (40, 10)


def test_layout_ordering():
    layout = BlockLayout(3, 2, 4)
    assert layout.keys == [0, 1, 2, (0, 1), (0, 2), (1, 2)]
    assert layout.size == 3 * 2 + 3 * 4
    assert layout.column_dim == 2 + 2 * 4
    assert list(layout.copies) == [1, 1, 1, 2, 2, 2]
    # column 1: vertex 1, then (0, 1), then (1, 2)
    expected = np.concatenate([np.arange(2, 4), np.arange(6, 10), np.arange(14, 18)])
    np.testing.assert_array_equal(layout.column_index[1], expected)


def test_edge_set_of_tolerance():
    theta = ParamBlocks(3, 1, 1)
    theta[(0, 1)] = [0.3]
    theta[(1, 2)] = [1e-12]
    assert sorted(edge_set_of(theta).edges) == [(0, 1), (1, 2)]
    assert sorted(edge_set_of(theta, tol=1e-9).edges) == [(0, 1)]
    with pytest.raises(ValueError):
        edge_set_of(theta, tol=-1.0)


def test_group_norms_and_penalty():
    theta = ParamBlocks(3, 1, 2)
    theta[(0, 1)] = [3.0, 4.0]
    assert group_norms(theta)[(0, 1)] == pytest.approx(5.0)

    ident = ParamBlocks.from_precision(np.eye(2))
    np.testing.assert_allclose(ident.layout.group_norms(ident.to_vector()), [1.0, 1.0, 0.0])
    assert penalty(ident) == pytest.approx(2.0)


def test_penalty_is_a_norm(rng):
    a = ParamBlocks.from_vector(rng.standard_normal(BlockLayout(4, 2, 4).size), BlockLayout(4, 2, 4))
    b = ParamBlocks.from_vector(rng.standard_normal(a.layout.size), a.layout)
    both = ParamBlocks.from_vector(a.to_vector() + b.to_vector(), a.layout)
    scaled = ParamBlocks.from_vector(-2.5 * a.to_vector(), a.layout)
    assert penalty(scaled) == pytest.approx(2.5 * penalty(a))
    assert penalty(both) <= penalty(a) + penalty(b) + 1e-12


def test_column_views_share_edge_blocks():
    theta = ParamBlocks(3, 1, 1)
    theta.column(0)[(2, 0)] = 7.0
    assert theta.column(2)[(0, 0)] == 7.0
    assert theta[(0, 2)][0] == 7.0
    assert len(theta.column(1)) == 3


def test_set_rejects_wrong_block_length():
    theta = ParamBlocks(3, 2, 4)
    with pytest.raises(DimensionMismatchError):
        theta[(0, 1)] = [1.0, 2.0]
    with pytest.raises(KeyError):
        theta[(1, 1)] = [0.0] * 4


def test_zero_padding_keeps_edge_set():
    theta = ParamBlocks(3, 1, 1)
    theta[(0, 1)] = [0.5]
    padded = theta.copy()
    padded[(1, 2)] = [0.0]
    assert edge_set_of(padded) == edge_set_of(theta)
    assert padded == theta


def test_precision_round_trip():
    omega = np.array([[2.0, -0.5, 0.0], [-0.5, 1.5, 0.25], [0.0, 0.25, 1.0]])
    theta = ParamBlocks.from_precision(omega)
    assert theta.edge_keys() == [(0, 1), (1, 2)]
    np.testing.assert_array_equal(theta.to_precision(), omega)
    assert theta.rho_star == pytest.approx(0.25)
    assert theta.kappa_1 == pytest.approx(2.5)


def test_embed_truncation_positions():
    old, new = BasisSpec.legendre(1, 1), BasisSpec.legendre(2, 2)
    theta = ParamBlocks(3, 1, 1, {0: [1.0], 1: [2.0], 2: [3.0], (0, 2): [4.0]})
    grown = embed_truncation(theta, old, new)
    np.testing.assert_array_equal(grown[0], [1.0, 0.0])
    np.testing.assert_array_equal(grown[(0, 2)], [4.0, 0.0, 0.0, 0.0])
    assert grown.edge_keys() == [(0, 2)]
    index = truncation_index(old, new, 3)
    np.testing.assert_array_equal(grown.to_vector()[index], theta.to_vector())
    with pytest.raises(ValueError):
        truncation_index(new, old, 3)
