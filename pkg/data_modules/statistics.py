"""Score-matching statistics and empirical Hyvarinen scores.

For a pairwise exponential family the Hyvarinen score of theta is a sum over
columns of psd quadratic forms,

    h(theta) = sum_i 1/2 theta_{.,i}^T Gamma_i theta_{.,i} + K_{.,i}^T theta_{.,i},

where Gamma_i and K_{.,i} are sample averages of a_i(x) a_i(x)^T and K_{.,i}(x).
This module builds them for the Gaussian family on R^d and for the truncated
Legendre family on [0, 1]^d.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from models.basis import BasisSpec
from models.dataset import Dataset, Support
from models.errors import DimensionMismatchError, DomainError, EmptyDatasetError
from models.legendre import legendre_table
from models.params import BlockLayout, ParamBlocks

log = logging.getLogger(__name__)


@dataclass
class StatsConfig:
    """Options of the statistics builder.

    Args:
        max_column_dim (int): refuse columns longer than this (dense p x p Gamma_i).
        n_jobs (int): parallel workers over columns.
    """

    max_column_dim: int = 20_000
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_column_dim < 1:
            raise ValueError(f"Invalid max_column_dim: {self.max_column_dim}")


@dataclass
class ColumnStats:
    """Gamma_i and K_{.,i} for one column.

    Args:
        i (int): column index.
        gamma (np.ndarray): p_i x p_i symmetric psd matrix.
        kvec (np.ndarray): length-p_i vector.
        n (int): number of samples averaged.
        vertex_dim (int): leading vertex block length.
        edge_dim (int): length of each following edge block.
        edge_weight (float): penalty weight of edge groups of this family.
    """

    i: int
    gamma: np.ndarray
    kvec: np.ndarray
    n: int
    vertex_dim: int
    edge_dim: int
    edge_weight: float = 1.0

    @property
    def dim(self) -> int:
        return self.kvec.shape[0]

    @property
    def d(self) -> int:
        return (self.dim - self.vertex_dim) // self.edge_dim + 1


@dataclass
class GaussianStats:
    """Sample second moment Sigma_hat = (1/n) sum x x^T."""

    sigma_hat: np.ndarray
    n: int

    @property
    def d(self) -> int:
        return self.sigma_hat.shape[0]

    def to_column_stats(self) -> List[ColumnStats]:
        """Column form: Gamma_i is Sigma_hat with i moved first, K_{.,i} = (-1, 0, ..., 0)."""
        out = []
        for i in range(self.d):
            perm = _column_order(self.d, i)
            kvec = np.zeros(self.d)
            kvec[0] = -1.0
            gamma = self.sigma_hat[np.ix_(perm, perm)].copy()
            out.append(ColumnStats(i, gamma, kvec, self.n, 1, 1, edge_weight=2.0))
        return out


Stats = Union[GaussianStats, List[ColumnStats]]


def _column_order(d: int, i: int) -> List[int]:
    return [i] + [j for j in range(d) if j != i]


def _require(data: Dataset, support: Support) -> None:
    if data.n == 0:
        raise EmptyDatasetError("Statistics need at least one sample")
    if data.support != support:
        raise DomainError(f"Expected {support.value} data, got {data.support.value}")


def gaussian_stats(data: Dataset) -> GaussianStats:
    _require(data, Support.REAL_LINE)
    x = data.values
    return GaussianStats(x.T @ x / data.n, data.n)


def column_design(data: Dataset, basis: BasisSpec, i: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-sample rows of column ``i``.

    Returns:
        Tuple[np.ndarray, np.ndarray]: ``M`` (n x p_i) with rows a_i(X^r) and
        ``K`` (n x p_i) with rows K_{.,i}(X^r).
    """
    x = data.values
    n, d = x.shape
    if basis.is_gaussian:
        # phi_ii = -x_i^2 / 2, phi_ij = -x_i x_j
        design = -x[:, _column_order(d, i)]
        krows = np.zeros_like(design)
        krows[:, 0] = -1.0
        return design, krows

    m1, m2 = basis.m1, basis.m2
    values, d1, d2 = legendre_table(x.T, max(m1, m2))  # (k, d, n)
    xi = x[:, i]
    w = xi * (1.0 - xi)
    slope = -2.0 * (2.0 * xi - 1.0) * w
    curve = w * w

    design_blocks = [w * d1[1:m1 + 1, i]]
    k_blocks = [slope * d1[1:m1 + 1, i] + curve * d2[1:m1 + 1, i]]
    di, dii = d1[1:m2 + 1, i], d2[1:m2 + 1, i]
    for j in range(d):
        if j == i:
            continue
        uj = values[1:m2 + 1, j]
        # block (a, b), a < b, entry (k, l) is phi_k(x_a) phi_l(x_b)
        if i < j:
            grad = np.einsum("kr,lr->klr", di, uj)
            hess = np.einsum("kr,lr->klr", dii, uj)
        else:
            grad = np.einsum("kr,lr->klr", uj, di)
            hess = np.einsum("kr,lr->klr", uj, dii)
        grad = grad.reshape(m2 * m2, n)
        hess = hess.reshape(m2 * m2, n)
        design_blocks.append(w * grad)
        k_blocks.append(slope * grad + curve * hess)
    return np.vstack(design_blocks).T, np.vstack(k_blocks).T


def _column_stats(data: Dataset, basis: BasisSpec, i: int) -> ColumnStats:
    design, krows = column_design(data, basis, i)
    gamma = design.T @ design / data.n
    gamma = 0.5 * (gamma + gamma.T)
    return ColumnStats(i, gamma, krows.mean(axis=0), data.n, basis.vertex_dim, basis.edge_dim, basis.edge_weight)


def legendre_column_stats(data: Dataset, basis: BasisSpec, config: StatsConfig = None) -> List[ColumnStats]:
    """Gamma_i and K_{.,i} of the bounded-support scoring rule, for every column.

    Column layout: the vertex block (degrees 1..m1 of phi_k(x_i)) followed by one
    m2^2 block per j != i in ascending j.
    """
    config = config or StatsConfig()
    if basis.is_gaussian:
        raise ValueError("legendre_column_stats needs a Legendre basis")
    _require(data, Support.UNIT_CUBE)
    p = basis.column_dim(data.d)
    if p > config.max_column_dim:
        raise ValueError(f"Column dimension {p} exceeds max_column_dim={config.max_column_dim}")
    log.debug("building %s statistics: n=%d d=%d p=%d", basis, data.n, data.d, p)
    if config.n_jobs == 1:
        return [_column_stats(data, basis, i) for i in range(data.d)]
    return Parallel(n_jobs=config.n_jobs, prefer="threads")(
        delayed(_column_stats)(data, basis, i) for i in range(data.d)
    )


def build_stats(data: Dataset, basis: BasisSpec, config: StatsConfig = None) -> Stats:
    if basis.is_gaussian:
        return gaussian_stats(data)
    return legendre_column_stats(data, basis, config)


def as_column_stats(stats: Stats) -> List[ColumnStats]:
    if isinstance(stats, GaussianStats):
        return stats.to_column_stats()
    return list(stats)


def stats_layout(stats: Sequence[ColumnStats]) -> BlockLayout:
    first = stats[0]
    return BlockLayout(len(stats), first.vertex_dim, first.edge_dim)


def check_compatible(theta: ParamBlocks, stats: Sequence[ColumnStats]) -> None:
    if not stats:
        raise DimensionMismatchError("Empty statistics")
    first = stats[0]
    if (theta.d, theta.vertex_dim, theta.edge_dim) != (len(stats), first.vertex_dim, first.edge_dim):
        raise DimensionMismatchError(
            f"theta has (d={theta.d}, {theta.vertex_dim}, {theta.edge_dim}), statistics have "
            f"(d={len(stats)}, {first.vertex_dim}, {first.edge_dim})"
        )
    for s in stats:
        if s.dim != first.dim or s.gamma.shape != (s.dim, s.dim):
            raise DimensionMismatchError(f"Column {s.i} has inconsistent dimension")


def hyvarinen_score(theta: Union[ParamBlocks, np.ndarray], stats: Stats) -> float:
    """Empirical Hyvarinen score of ``theta``.

    Gaussian statistics use the trace form trace(1/2 Omega Sigma Omega - Omega);
    ``theta`` may then be a precision matrix.
    """
    if isinstance(stats, GaussianStats):
        omega = theta.to_precision() if isinstance(theta, ParamBlocks) else np.asarray(theta, dtype=float)
        if omega.shape != stats.sigma_hat.shape:
            raise DimensionMismatchError(f"Omega of shape {omega.shape} vs Sigma of shape {stats.sigma_hat.shape}")
        return float(0.5 * np.sum(omega * (stats.sigma_hat @ omega)) - np.trace(omega))

    check_compatible(theta, stats)
    columns = theta.to_vector()[theta.layout.column_index]
    total = 0.0
    for s, col in zip(stats, columns):
        total += 0.5 * col @ s.gamma @ col + s.kvec @ col
    return float(total)


def score_on_holdout(theta: ParamBlocks, holdout: Dataset, basis: BasisSpec) -> float:
    holdout.require_samples()
    return hyvarinen_score(theta, build_stats(holdout, basis))


def gaussian_nll(omega: np.ndarray, holdout_sigma: np.ndarray) -> float:
    """Per-sample Gaussian negative log-likelihood, ``inf`` if Omega is not positive definite."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != holdout_sigma.shape:
        raise DimensionMismatchError(f"Omega of shape {omega.shape} vs Sigma of shape {holdout_sigma.shape}")
    try:
        chol = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        return math.inf
    d = omega.shape[0]
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * logdet + 0.5 * np.sum(omega * holdout_sigma) + 0.5 * d * math.log(2.0 * math.pi))


def gaussian_holdout_risk(theta: Union[ParamBlocks, np.ndarray], holdout: Dataset) -> float:
    """Held-out Gaussian NLL of a precision matrix (or scalar-block parameters)."""
    holdout.require_samples()
    omega = theta.to_precision() if isinstance(theta, ParamBlocks) else np.asarray(theta, dtype=float)
    return gaussian_nll(omega, gaussian_stats(holdout).sigma_hat)
