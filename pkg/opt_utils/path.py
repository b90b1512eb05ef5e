"""Regularization paths, truncation paths and held-out model selection."""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from data_modules.statistics import (
    ColumnStats,
    GaussianStats,
    Stats,
    StatsConfig,
    as_column_stats,
    build_stats,
    column_design,
    gaussian_nll,
    hyvarinen_score,
    stats_layout,
)
from models.basis import BasisSpec
from models.dataset import Dataset
from models.errors import CriterionUnavailableError, QuasrError
from models.params import ParamBlocks, edge_set_of, truncation_index
from opt_utils.admm import AdmmConfig, AdmmState, ColumnProblem, admm_fit
from opt_utils.coordinate_descent import CdConfig, cd_fit
from opt_utils.factor import PermutedFactor, augment_factor, build_column_factor, stack_operators
from opt_utils.ista import IstaConfig, ista_fit
from opt_utils.result import FitResult

log = logging.getLogger(__name__)

SOLVERS = ("cd", "admm", "ista")
Truncation = Tuple[int, int]


class GridPolicy(str, Enum):
    LOG_SPACED = "log_spaced"
    EXPLICIT = "explicit"


class Criterion(str, Enum):
    HYVARINEN_HOLDOUT = "hyvarinen"
    GAUSSIAN_NLL_HOLDOUT = "nll"


def vertex_only_solution(stats: Stats) -> np.ndarray:
    """Minimizer of the smooth part over the vertex groups with every edge group held at zero.

    Columns decouple: the vertex block of column i solves Gamma_i[v, v] t = -K_{v,i}.
    """
    cols = as_column_stats(stats)
    layout = stats_layout(cols)
    vd = cols[0].vertex_dim
    z = np.zeros(layout.size)
    index = layout.column_index
    for s in cols:
        z[index[s.i, :vd]] = np.linalg.lstsq(s.gamma[:vd, :vd], -s.kvec[:vd], rcond=None)[0]
    return z


def lambda_start(stats: Stats, penalize_vertices: bool = True) -> float:
    """Smallest lambda at which every penalized group is zero.

    The gradient is taken at theta = 0 or, with unpenalized vertices, at
    ``vertex_only_solution``. Edge gradients are summed over the two column
    copies before the norm; each group norm is divided by the group's penalty weight.
    """
    problem = ColumnProblem(as_column_stats(stats), penalize_vertices)
    penalized = problem.weights > 0
    if not np.any(penalized):
        return 0.0
    z = np.zeros(problem.layout.size) if penalize_vertices else vertex_only_solution(stats)
    norms = problem.layout.group_norms(problem.gradient(z))
    return float(np.max(norms[penalized] / problem.weights[penalized]))


def truncation_grid(m_max: int) -> List[Truncation]:
    """(1, 1), (2, 2), ..., (m_max, m_max)."""
    if m_max < 1:
        raise ValueError(f"Invalid m_max: {m_max}")
    return [(m, m) for m in range(1, m_max + 1)]


@dataclass
class PathSpec:
    """Lambda grid and truncation levels of a path.

    Args:
        policy (GridPolicy): ``LOG_SPACED`` grids start at lambda_start of every truncation.
        count (int): number of log-spaced values.
        ratio_min (float): smallest lambda as a fraction of lambda_start.
        lambdas (Optional[Sequence[float]]): explicit strictly descending grid.
        truncations (Optional[Sequence[Truncation]]): ascending (m1, m2) levels, legendre only.
    """

    policy: GridPolicy = GridPolicy.LOG_SPACED
    count: int = 30
    ratio_min: float = 0.01
    lambdas: Optional[Sequence[float]] = None
    truncations: Optional[Sequence[Truncation]] = None

    def __post_init__(self):
        self.policy = GridPolicy(self.policy)
        if self.policy == GridPolicy.EXPLICIT:
            if not self.lambdas:
                raise ValueError("An explicit grid needs at least one lambda")
            grid = np.asarray(self.lambdas, dtype=float)
            if np.any(grid < 0) or np.any(np.diff(grid) >= 0):
                raise ValueError(f"Invalid lambda grid (must be nonnegative, strictly descending): {list(grid)}")
            self.lambdas = [float(v) for v in grid]
        else:
            if self.count < 1:
                raise ValueError(f"Invalid grid size: {self.count}")
            if not 0 < self.ratio_min <= 1:
                raise ValueError(f"Invalid ratio_min: {self.ratio_min}")
        if self.truncations is not None:
            levels = [tuple(int(v) for v in t) for t in self.truncations]
            for prev, cur in zip(levels, levels[1:]):
                if cur[0] < prev[0] or cur[1] < prev[1] or cur == prev:
                    raise ValueError(f"Truncations must ascend: {prev} then {cur}")
            if any(m < 1 for t in levels for m in t):
                raise ValueError(f"Invalid truncations: {levels}")
            self.truncations = levels

    @classmethod
    def explicit(cls, lambdas: Sequence[float], truncations: Optional[Sequence[Truncation]] = None) -> "PathSpec":
        return cls(GridPolicy.EXPLICIT, lambdas=lambdas, truncations=truncations)

    def grid(self, start: float) -> np.ndarray:
        if self.policy == GridPolicy.EXPLICIT:
            return np.asarray(self.lambdas)
        if start <= 0:
            return np.zeros(1)
        if self.count == 1:
            return np.array([start])
        return np.geomspace(start, start * self.ratio_min, self.count)

    def bases(self, basis: BasisSpec) -> List[BasisSpec]:
        if basis.is_gaussian or not self.truncations:
            return [basis]
        return [BasisSpec.legendre(m1, m2) for m1, m2 in self.truncations]


@dataclass
class PathEntry:
    """One fitted (lambda, truncation) cell.

    ``seeded_from`` is the index of the entry whose solution warm-started this
    fit (None for a cold start); ``error`` is set when the fit failed.
    """

    index: int
    lam: float
    basis: BasisSpec
    theta: Optional[ParamBlocks] = None
    edge_count: int = 0
    train_score: Optional[float] = None
    holdout_score: Optional[float] = None
    holdout_nll: Optional[float] = None
    iterations: int = 0
    kkt: float = float("nan")
    converged: bool = False
    seeded_from: Optional[int] = None
    error: Optional[str] = None
    elapsed: float = 0.0

    @property
    def truncation(self) -> Optional[Truncation]:
        return None if self.basis.is_gaussian else (self.basis.m1, self.basis.m2)

    @property
    def ok(self) -> bool:
        return self.error is None and self.theta is not None


@dataclass
class PathResult:
    entries: List[PathEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[PathEntry]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> PathEntry:
        return self.entries[index]

    @property
    def lambdas(self) -> List[float]:
        return [e.lam for e in self.entries]

    @property
    def failures(self) -> int:
        return sum(not e.ok for e in self.entries)

    @property
    def converged(self) -> bool:
        return all(e.converged for e in self.entries if e.ok)


class Selection(NamedTuple):
    index: int
    lam: float
    truncation: Optional[Truncation]
    theta: ParamBlocks


def column_truncation_index(old: BasisSpec, new: BasisSpec, d: int) -> np.ndarray:
    """Positions of the ``old`` column coordinates inside a column of the ``new`` basis."""
    if old.is_gaussian or new.is_gaussian or new.m1 < old.m1 or new.m2 < old.m2:
        raise ValueError(f"{new} does not enlarge {old}")
    grid = (np.arange(old.m2)[:, None] * new.m2 + np.arange(old.m2)[None, :]).reshape(-1)
    parts = [np.arange(old.m1)]
    for slot in range(d - 1):
        parts.append(new.m1 + slot * new.edge_dim + grid)
    return np.concatenate(parts)


def grow_column_factors(factors: List, stats: Sequence, old: BasisSpec, new: BasisSpec, rho: float) -> List:
    """Solve operators of the enlarged ``stats`` built from cached ``factors`` of basis ``old``."""
    d = len(stats)
    kept = column_truncation_index(old, new, d)
    added = np.setdiff1d(np.arange(new.column_dim(d)), kept)
    perm = np.concatenate([kept, added])
    grown = []
    for factor, s in zip(factors, stats):
        b = s.gamma[np.ix_(kept, added)]
        c = s.gamma[np.ix_(added, added)]
        grown.append(PermutedFactor(augment_factor(factor, b, c, rho), perm))
    return grown


def pad_state(state, solver: str, old: BasisSpec, new: BasisSpec, d: int):
    """Zero-pads a solver warm state from basis ``old`` into basis ``new``."""
    flat = truncation_index(old, new, d)
    size = new.vertex_dim * d + new.edge_dim * d * (d - 1) // 2
    if solver == "ista":
        z = np.zeros(size)
        z[flat] = state
        return z
    cols = column_truncation_index(old, new, d)
    p = new.column_dim(d)
    theta = np.zeros((d, p))
    y = np.zeros((d, p))
    z = np.zeros(size)
    theta[:, cols] = state.theta_cols
    y[:, cols] = state.y
    z[flat] = state.z
    return AdmmState(theta, z, y)


def _design_for_svd(data: Dataset, basis: BasisSpec, stats: ColumnStats) -> Optional[np.ndarray]:
    if data.n >= stats.dim:
        return None
    return column_design(data, basis, stats.i)[0]


@dataclass
class SolverOptions:
    """Solver choice and tolerances shared by every cell of a path.

    Args:
        solver (str): "cd" (gaussian only), "admm" or "ista".
        rho (float): ADMM penalty parameter.
        rel_tol (Optional[float]): solver tolerance, solver default when None.
        max_iters (Optional[int]): iteration (sweep) cap, solver default when None.
        penalize_vertices (bool): include vertex (diagonal) groups in the penalty.
    """

    solver: str = "admm"
    rho: float = 1.0
    rel_tol: Optional[float] = None
    max_iters: Optional[int] = None
    penalize_vertices: bool = True

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"Invalid solver: {self.solver}")


def fit_single(stats: Stats, lam: float, opts: SolverOptions, warm_state=None, factors=None) -> FitResult:
    """One regularized fit with the solver named in ``opts``."""
    extra = {}
    if opts.rel_tol is not None:
        extra["rel_tol"] = opts.rel_tol
    if opts.solver == "cd":
        if not isinstance(stats, GaussianStats):
            raise ValueError("Coordinate descent only fits the gaussian family")
        if opts.max_iters is not None:
            extra["max_sweeps"] = opts.max_iters
        cfg = CdConfig(lam=lam, penalize_diagonal=opts.penalize_vertices, **extra)
        return cd_fit(stats, cfg, init=warm_state)
    if opts.max_iters is not None:
        extra["max_iters"] = opts.max_iters
    if opts.solver == "admm":
        cfg = AdmmConfig(lam=lam, rho=opts.rho, penalize_vertices=opts.penalize_vertices, **extra)
        return admm_fit(stats, cfg, warm=warm_state, factors=factors)
    cfg = IstaConfig(lam=lam, penalize_vertices=opts.penalize_vertices, **extra)
    return ista_fit(stats, cfg, warm=warm_state)


def fit_path(
    data: Dataset,
    basis: BasisSpec,
    spec: PathSpec,
    holdout: Dataset,
    solver: str = "admm",
    warm: bool = True,
    rho: float = 1.0,
    rel_tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    penalize_vertices: bool = True,
    stats_config: Optional[StatsConfig] = None,
    progress: bool = False,
) -> PathResult:
    """Fits every (lambda, truncation) cell of ``spec``.

    Lambda descends within a truncation level. On the first level each fit is
    warm-started from the previous one; every fit of a later level starts from
    the zero-padded fit of the previous level at the nearest lambda and, for
    ADMM, from the previous level's factors grown with ``augment_factor``.
    Columns longer than the sample are factored through the SVD of their
    design matrix. Failed cells are recorded and skipped.

    Args:
        data (Dataset): training samples.
        basis (BasisSpec): family; ignored truncation-wise when ``spec.truncations`` is set.
        spec (PathSpec): grid description.
        holdout (Dataset): tuning samples.
        solver (str): "cd" (gaussian only), "admm" or "ista".
        warm (bool): warm starts along the path; False fits every cell cold.
        rho (float): ADMM penalty parameter.
        rel_tol (Optional[float]): solver tolerance, solver default when None.
        max_iters (Optional[int]): solver iteration cap, solver default when None.
        penalize_vertices (bool): include vertex (diagonal) groups in the penalty.
        stats_config (Optional[StatsConfig]): statistics builder options.
        progress (bool): show a progress bar.

    Returns:
        PathResult: entries in fitting order.
    """
    if solver not in SOLVERS:
        raise ValueError(f"Invalid solver: {solver}")
    if solver == "cd" and not basis.is_gaussian:
        raise ValueError("Coordinate descent only fits the gaussian family")
    data.require_samples()
    holdout.require_samples()
    opts = SolverOptions(solver, rho, rel_tol, max_iters, penalize_vertices)

    result = PathResult()
    previous_basis = None
    previous_factors = None
    seeds: List[Tuple[float, int, object]] = []  # (lambda, entry index, state) of the previous level
    bases = spec.bases(basis)
    start = time.perf_counter()
    for level_basis in bases:
        stats = build_stats(data, level_basis, stats_config)
        holdout_stats = build_stats(holdout, level_basis, stats_config)
        grid = spec.grid(lambda_start(stats, penalize_vertices))

        factors = operators = None
        if solver == "admm":
            cols = as_column_stats(stats)
            if warm and previous_factors is not None:
                factors = grow_column_factors(previous_factors, cols, previous_basis, level_basis, rho)
            else:
                factors = [build_column_factor(s, rho, _design_for_svd(data, level_basis, s)) for s in cols]
            operators = stack_operators(factors)

        level_seeds = []
        state, seeded_from = None, None
        cells = tqdm(grid, desc=str(level_basis), leave=False) if progress else grid
        for lam in cells:
            if warm and seeds:
                # same lambda, previous truncation, zero-padded
                _, seeded_from, seed_state = min(seeds, key=lambda seed: abs(seed[0] - lam))
                state = pad_state(seed_state, solver, previous_basis, level_basis, data.d)
            entry = PathEntry(index=len(result), lam=float(lam), basis=level_basis, seeded_from=seeded_from)
            try:
                fit = fit_single(stats, float(lam), opts, state, operators)
            except (QuasrError, np.linalg.LinAlgError) as exc:
                log.warning("path cell lambda=%.4g %s failed: %s", lam, level_basis, exc)
                entry.error = str(exc)
                result.entries.append(entry)
                continue

            entry.theta = fit.theta
            entry.edge_count = len(edge_set_of(fit.theta))
            entry.iterations = fit.iterations
            entry.kkt = fit.kkt
            entry.converged = fit.converged
            entry.elapsed = fit.elapsed
            entry.train_score = hyvarinen_score(fit.theta, stats)
            entry.holdout_score = hyvarinen_score(fit.theta, holdout_stats)
            if isinstance(holdout_stats, GaussianStats):
                entry.holdout_nll = gaussian_nll(fit.theta.to_precision(), holdout_stats.sigma_hat)
            result.entries.append(entry)
            log.debug("lambda=%.4g %s edges=%d iterations=%d", lam, level_basis, entry.edge_count, fit.iterations)

            level_seeds.append((entry.lam, entry.index, fit.state))
            if warm:
                state, seeded_from = fit.state, entry.index
        seeds = level_seeds
        previous_basis, previous_factors = level_basis, factors

    log.info("fitted %d path cells (%d failed) in %.2fs", len(result), result.failures, time.perf_counter() - start)
    return result


def select_model(path: PathResult, criterion: Criterion = Criterion.HYVARINEN_HOLDOUT) -> Selection:
    """Entry minimizing the held-out criterion; ties go to the larger lambda."""
    criterion = Criterion(criterion)
    if len(path) == 0:
        raise ValueError("Cannot select from an empty path")
    candidates = [e for e in path if e.ok]
    if criterion == Criterion.GAUSSIAN_NLL_HOLDOUT:
        if any(not e.basis.is_gaussian for e in candidates):
            raise CriterionUnavailableError("Held-out NLL needs the gaussian family")
        scores = [e.holdout_nll for e in candidates]
    else:
        scores = [e.holdout_score for e in candidates]
    pairs = [(s, e) for s, e in zip(scores, candidates) if s is not None and not np.isnan(s)]
    if not pairs:
        raise CriterionUnavailableError(f"No path entry has a {criterion.value} score")
    best_score = min(s for s, _ in pairs)
    tied = [e for s, e in pairs if s == best_score]
    best = max(tied, key=lambda e: (e.lam, -e.index))
    return Selection(best.index, best.lam, best.truncation, best.theta)
