import numpy as np
import pytest

from data_modules.simulate import GraphModelSpec, gen_copula_graph, gen_gaussian_graph
from data_modules.statistics import gaussian_stats, legendre_column_stats
from models.basis import BasisSpec
from models.dataset import Dataset, Support


@pytest.fixture
def rng():
    return np.random.default_rng(20170801)


@pytest.fixture
def make_gaussian_stats():
    """Statistics of ``n`` standardized correlated normal samples in ``d`` dimensions."""

    def make(rng, d, n):
        mix = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        data = Dataset(rng.standard_normal((n, d)) @ mix).standardize()
        return gaussian_stats(data)

    return make


@pytest.fixture
def make_unit_data():
    def make(rng, d, n):
        base = rng.standard_normal((n, d))
        base[:, 1:] += 0.6 * base[:, :-1]
        return Dataset(0.5 + 0.5 * np.tanh(0.5 * base), Support.UNIT_CUBE)

    return make


@pytest.fixture
def legendre_stats(rng, make_unit_data):
    data = make_unit_data(rng, 4, 300)
    return legendre_column_stats(data, BasisSpec.legendre(2, 2))


@pytest.fixture
def tree_gaussian():
    """Train and holdout halves (n=400 each) of one standardized sample from a d=5 tree."""
    sim = gen_gaussian_graph(GraphModelSpec(kind="tree", d=5), 800, seed=11)
    return sim.data.subset(np.arange(400)), sim.data.subset(np.arange(400, 800))


@pytest.fixture
def tree_copula():
    sim = gen_copula_graph(GraphModelSpec(kind="tree", d=4), 600, seed=3)
    return sim.data.subset(np.arange(300)), sim.data.subset(np.arange(300, 600))
