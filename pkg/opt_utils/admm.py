"""Consensus ADMM for regularized score matching.

The problem

    min 1/2 sum_i theta_{.,i}^T Gamma_i theta_{.,i} + K_{.,i}^T theta_{.,i} + lam sum_g w_g ||z_g||_2
    s.t. theta_ij = theta_ji = z_ij

splits into d independent column solves (step a), a group shrinkage that pools
the two copies of every edge (step b) and a dual update (step c). Columns are
stored stacked as a (d, p) array and mapped onto the flat group vector z through
``BlockLayout.column_index``, so steps b and c are scatter/gather operations.
"""
import logging
import time
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from data_modules.statistics import ColumnStats, Stats, as_column_stats, check_compatible, stats_layout
from models.errors import DimensionMismatchError
from models.params import BlockLayout, ParamBlocks
from opt_utils.factor import build_column_factor, stack_operators
from opt_utils.prox import shrink_groups
from opt_utils.result import FitResult

log = logging.getLogger(__name__)


@dataclass
class AdmmConfig:
    """Options of ``admm_fit``.

    Args:
        lam (float): regularization level.
        rho (float): augmented Lagrangian penalty.
        max_iters (int): iteration cap.
        rel_tol (float): stop when sum|d theta| / max(sum|theta|, 1) drops below it.
        penalize_vertices (bool): include vertex groups in the penalty.
    """

    lam: float = 0.1
    rho: float = 1.0
    max_iters: int = 10_000
    rel_tol: float = 1e-4
    penalize_vertices: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"Invalid lambda: {self.lam}")
        if self.rho <= 0:
            raise ValueError(f"Invalid rho: {self.rho}")
        if self.rel_tol <= 0:
            raise ValueError(f"Invalid rel_tol: {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError(f"Invalid max_iters: {self.max_iters}")


@dataclass
class AdmmState:
    """Primal column copies, consensus blocks and scaled duals.

    Args:
        theta_cols (np.ndarray): (d, p) column copies theta_{.,i}.
        z (np.ndarray): flat consensus vector in ``BlockLayout`` order.
        y (np.ndarray): (d, p) duals; y_ij lives in column j, y_ji in column i.
    """

    theta_cols: np.ndarray
    z: np.ndarray
    y: np.ndarray

    def copy(self) -> "AdmmState":
        return AdmmState(self.theta_cols.copy(), self.z.copy(), self.y.copy())


class ColumnProblem:
    """Stacked statistics of one column-stats list."""

    def __init__(self, stats: Sequence[ColumnStats], penalize_vertices: bool = True):
        first = stats[0]
        for s in stats:
            if (s.dim, s.vertex_dim, s.edge_dim) != (first.dim, first.vertex_dim, first.edge_dim):
                raise DimensionMismatchError(f"Column {s.i} does not match column {first.i}")
        self.layout: BlockLayout = stats_layout(stats)
        if self.layout.column_dim != first.dim:
            raise DimensionMismatchError(f"Columns of length {first.dim} do not fit d={len(stats)}")
        self.index = self.layout.column_index
        self.flat_index = self.index.ravel()
        self.gammas = np.stack([s.gamma for s in stats])
        self.kvecs = np.stack([s.kvec for s in stats])
        self.weights = self.layout.weights(first.edge_weight, penalize_vertices)

    def gather(self, z: np.ndarray) -> np.ndarray:
        return z[self.index]

    def scatter(self, cols: np.ndarray) -> np.ndarray:
        return np.bincount(self.flat_index, weights=cols.ravel(), minlength=self.layout.size)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """Gradient of the smooth part w.r.t. the shared groups (both copies summed)."""
        cols = self.gather(z)
        return self.scatter(np.einsum("ipq,iq->ip", self.gammas, cols) + self.kvecs)

    def smooth(self, z: np.ndarray) -> float:
        cols = self.gather(z)
        return float(0.5 * np.einsum("ip,ipq,iq->", cols, self.gammas, cols) + np.sum(self.kvecs * cols))

    def objective(self, z: np.ndarray, lam: float) -> float:
        return self.smooth(z) + lam * float(self.weights @ self.layout.group_norms(z))

    def kkt(self, z: np.ndarray, lam: float) -> float:
        grad = self.gradient(z)
        norms = self.layout.group_norms(z)
        gidx = self.layout.group_index
        bound = self.weights * lam
        grad_norms = self.layout.group_norms(grad)
        with np.errstate(divide="ignore", invalid="ignore"):
            direction = np.where(norms[gidx] > 0, z / norms[gidx], 0.0)
        moved = self.layout.group_norms(grad + bound[gidx] * direction)
        residual = np.where(norms > 0, moved, np.maximum(grad_norms - bound, 0.0))
        return float(residual.max())


def general_kkt_residual(theta: ParamBlocks, stats: Stats, lam: float, penalize_vertices: bool = True) -> float:
    """Largest group violation of Gamma theta + K + Z = 0 with Z in lam dR(theta)."""
    if lam < 0:
        raise ValueError(f"Invalid lambda: {lam}")
    stats = as_column_stats(stats)
    check_compatible(theta, stats)
    return ColumnProblem(stats, penalize_vertices).kkt(theta.to_vector(), lam)


def _zero_solution(problem: ColumnProblem) -> AdmmState:
    # exact fixed point of the iteration: theta = z = 0, y = -K
    shape = problem.kvecs.shape
    return AdmmState(np.zeros(shape), np.zeros(problem.layout.size), -problem.kvecs.copy())


def admm_fit(stats: Stats, cfg: AdmmConfig, warm: Optional[AdmmState] = None,
             factors: Optional[Union[List, np.ndarray]] = None) -> FitResult:
    """Consensus ADMM from ``warm`` (zeros by default).

    Args:
        stats (Stats): column statistics (Gaussian statistics are converted).
        cfg (AdmmConfig): solver options.
        warm (Optional[AdmmState]): full primal/dual warm start.
        factors: cached solve operators of Gamma_i + rho I, one per column, or their
            (d, p, p) dense stack from ``stack_operators``.

    Returns:
        FitResult: theta read from z (exact group zeros) and the final state.
    """
    start = time.perf_counter()
    stats = as_column_stats(stats)
    problem = ColumnProblem(stats, cfg.penalize_vertices)
    layout = problem.layout
    rho = cfg.rho

    if problem.kkt(np.zeros(layout.size), cfg.lam) == 0.0:
        state = _zero_solution(problem)
        return FitResult(
            theta=ParamBlocks.from_vector(state.z, layout),
            lam=cfg.lam,
            solver="admm",
            iterations=0,
            kkt=0.0,
            converged=True,
            objective=0.0,
            state=state,
            elapsed=time.perf_counter() - start,
        )

    if factors is None:
        factors = [build_column_factor(s, rho) for s in stats]
    if not isinstance(factors, np.ndarray):
        if len(factors) != len(stats) or any(f.dim != layout.column_dim for f in factors):
            raise DimensionMismatchError("Cached factors do not match the statistics")
        factors = stack_operators(factors)
    if factors.shape != (len(stats), layout.column_dim, layout.column_dim):
        raise DimensionMismatchError("Cached factors do not match the statistics")
    ops = factors

    if warm is None:
        state = AdmmState(np.zeros(problem.kvecs.shape), np.zeros(layout.size), np.zeros(problem.kvecs.shape))
    else:
        if warm.theta_cols.shape != problem.kvecs.shape or warm.z.shape != (layout.size,):
            raise DimensionMismatchError("Warm state does not match the statistics")
        state = warm.copy()
    theta, z, y = state.theta_cols, state.z, state.y

    copies = layout.copies[layout.group_index].astype(float)
    thresholds = problem.weights * cfg.lam / (rho * layout.copies)
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        previous = theta
        # (a) column solves
        theta = np.einsum("ipq,iq->ip", ops, -problem.kvecs - y + rho * problem.gather(z))
        # (b) pool the copies and shrink every group
        z = shrink_groups(problem.scatter(theta + y / rho) / copies, layout.group_index, thresholds)
        # (c) duals
        z_cols = problem.gather(z)
        y = y + rho * (theta - z_cols)

        change = np.abs(theta - previous).sum()
        scale = max(np.abs(theta).sum(), 1.0)
        gap = np.abs(theta - z_cols).max()
        history.append(change / scale)
        if change < cfg.rel_tol * scale and gap <= 10.0 * cfg.rel_tol * (1.0 + np.abs(z).max()):
            converged = True
            break

    if not converged:
        warnings.warn(f"ADMM did not converge in {cfg.max_iters} iterations (lambda={cfg.lam}, "
                      f"last change {history[-1]:.2e})", ConvergenceWarning)
    kkt = problem.kkt(z, cfg.lam)
    log.debug("admm_fit lambda=%.4g iterations=%d kkt=%.2e", cfg.lam, it, kkt)
    return FitResult(
        theta=ParamBlocks.from_vector(z, layout),
        lam=cfg.lam,
        solver="admm",
        iterations=it,
        kkt=kkt,
        converged=converged,
        objective=problem.objective(z, cfg.lam),
        history=history,
        state=AdmmState(theta, z, y),
        elapsed=time.perf_counter() - start,
    )
