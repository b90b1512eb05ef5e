"""Synthetic graphs, precision matrices and samples for structure-recovery runs."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from models.dataset import Dataset, Support
from models.graph import Graph

log = logging.getLogger(__name__)

COPULA_EPS = 1e-9
COPULA_MEAN = 0.5
COPULA_SD = 1.0 / 8.0


class GraphKind(str, Enum):
    TREE = "tree"
    ERDOS_RENYI = "er"


@dataclass
class GraphModelSpec:
    """Random graph plus precision-matrix generator.

    Args:
        kind (GraphKind): uniform random spanning tree or Erdos-Renyi graph.
        d (int): number of vertices.
        p (float): edge probability of the Erdos-Renyi graph.
        edge_weight_range (Tuple[float, float]): magnitude range of off-diagonal entries (random sign).
        diagonal_boost (float): added to the absolute row sums on the diagonal.
    """

    kind: GraphKind = GraphKind.TREE
    d: int = 10
    p: float = 0.1
    edge_weight_range: Tuple[float, float] = (0.2, 0.5)
    diagonal_boost: float = 1.0

    def __post_init__(self):
        self.kind = GraphKind(self.kind)
        if self.d < 1:
            raise ValueError(f"Invalid dimension: {self.d}")
        if self.kind == GraphKind.ERDOS_RENYI and not 0 < self.p < 1:
            raise ValueError(f"Invalid edge probability: {self.p}")
        low, high = self.edge_weight_range
        if not 0 <= low <= high:
            raise ValueError(f"Invalid edge weight range: {self.edge_weight_range}")
        if self.diagonal_boost <= 0:
            raise ValueError(f"Invalid diagonal boost: {self.diagonal_boost}")


@dataclass
class SimulatedData:
    data: Dataset
    graph: Graph
    precision: np.ndarray


def random_tree(d: int, rng: np.random.Generator) -> Graph:
    """Uniform labeled tree decoded from a random Pruefer sequence."""
    if d == 1:
        return Graph(1, frozenset())
    if d == 2:
        return Graph.from_edges(2, [(0, 1)])
    tree = nx.from_prufer_sequence([int(v) for v in rng.integers(0, d, size=d - 2)])
    return Graph.from_edges(d, tree.edges())


def random_er_graph(d: int, p: float, rng: np.random.Generator) -> Graph:
    graph = nx.gnp_random_graph(d, p, seed=int(rng.integers(2**32)))
    return Graph.from_edges(d, graph.edges())


def random_graph(spec: GraphModelSpec, rng: np.random.Generator) -> Graph:
    if spec.kind == GraphKind.TREE:
        return random_tree(spec.d, rng)
    return random_er_graph(spec.d, spec.p, rng)


def random_precision(graph: Graph, spec: GraphModelSpec, rng: np.random.Generator,
                     max_repairs: int = 10) -> np.ndarray:
    """Diagonally dominant precision matrix supported exactly on ``graph``."""
    d = graph.d
    omega = np.zeros((d, d))
    low, high = spec.edge_weight_range
    for i, j in graph.sorted_edges():
        value = rng.uniform(low, high) * rng.choice((-1.0, 1.0))
        omega[i, j] = omega[j, i] = value
    row_sums = np.abs(omega).sum(axis=1)
    boost = spec.diagonal_boost
    for _ in range(max_repairs):
        candidate = omega.copy()
        np.fill_diagonal(candidate, row_sums + boost)
        if np.linalg.eigvalsh(candidate)[0] > 1e-6:
            return candidate
        log.warning("precision not positive definite with boost %.3g, retrying", boost)
        boost *= 2.0
    raise ValueError(f"Could not make the precision matrix positive definite (boost {boost})")


def sample_gaussian(precision: np.ndarray, n: int, rng: np.random.Generator,
                    mean: Optional[np.ndarray] = None) -> np.ndarray:
    if n < 1:
        raise ValueError(f"Invalid sample size: {n}")
    d = precision.shape[0]
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    mean = np.zeros(d) if mean is None else mean
    return rng.multivariate_normal(mean, cov, size=n, method="cholesky")


def gen_gaussian_graph(spec: GraphModelSpec, n: int, seed: int) -> SimulatedData:
    """Random graph, its precision matrix and ``n`` standardized Gaussian samples."""
    rng = np.random.default_rng(seed)
    graph = random_graph(spec, rng)
    precision = random_precision(graph, spec, rng)
    data = Dataset(sample_gaussian(precision, n, rng)).standardize()
    log.debug("simulated %s graph d=%d edges=%d n=%d", spec.kind.value, spec.d, len(graph), n)
    return SimulatedData(data, graph, precision)


def copula_transform(data: Dataset) -> Dataset:
    """y = sign(x - 0.5) |x - 0.5|^0.6 / 5 + 0.5, clamped into the open unit cube."""
    x = data.values - 0.5
    y = np.sign(x) * np.abs(x) ** 0.6 / 5.0 + 0.5
    return Dataset(np.clip(y, COPULA_EPS, 1.0 - COPULA_EPS), Support.UNIT_CUBE)


def copula_source(precision: np.ndarray, n: int, rng: np.random.Generator) -> Dataset:
    """Gaussian samples with mean 0.5, the correlation of ``precision`` and sd 1/8."""
    cov = np.linalg.inv(precision)
    scale = 1.0 / np.sqrt(np.diag(cov))
    corr_precision = precision / np.outer(scale, scale)
    samples = sample_gaussian(corr_precision / COPULA_SD**2, n, rng, mean=np.full(precision.shape[0], COPULA_MEAN))
    return Dataset(samples)


def gen_copula_graph(spec: GraphModelSpec, n: int, seed: int) -> SimulatedData:
    """Like ``gen_gaussian_graph`` with the copula transform applied to unit-cube data."""
    rng = np.random.default_rng(seed)
    graph = random_graph(spec, rng)
    precision = random_precision(graph, spec, rng)
    return SimulatedData(copula_transform(copula_source(precision, n, rng)), graph, precision)
