"""Replicated structure-recovery experiments on simulated graphs."""
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from data_modules.metrics import MetricReport, roc_curve
from data_modules.simulate import (
    GraphKind,
    GraphModelSpec,
    copula_source,
    copula_transform,
    random_graph,
    random_precision,
    sample_gaussian,
)
from models.basis import BasisSpec
from models.dataset import Dataset
from models.errors import InputFormatError, QuasrError
from opt_utils.path import Criterion, PathSpec, fit_path, select_model

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """Descriptor of a replicated experiment (one JSON object).

    Args:
        graph (str): "tree" or "er".
        d (int): dimension.
        p (float): Erdos-Renyi edge probability.
        n (int): training samples per replication.
        n_holdout (int): tuning samples per replication.
        reps (int): replications.
        basis (str): "gaussian" or "legendre".
        m1 (Optional[int]): legendre vertex truncation.
        m2 (Optional[int]): legendre edge truncation.
        solver (str): "cd", "admm" or "ista".
        n_lambdas (int): size of the log-spaced lambda grid.
        lambda_min_ratio (float): smallest lambda over lambda_start.
        copula (bool): apply the copula transform (legendre family).
        criterion (str): "nll" (gaussian only) or "hyvarinen".
        seed (int): master seed.
        rho (float): ADMM penalty parameter.
        tol (Optional[float]): solver tolerance, solver default when None.
        max_iters (Optional[int]): solver iteration cap, solver default when None.
    """

    graph: str = "tree"
    d: int = 10
    p: float = 0.1
    n: int = 100
    n_holdout: int = 100
    reps: int = 1
    basis: str = "gaussian"
    m1: Optional[int] = None
    m2: Optional[int] = None
    solver: str = "cd"
    n_lambdas: int = 30
    lambda_min_ratio: float = 0.01
    copula: bool = False
    criterion: str = "nll"
    seed: int = 0
    rho: float = 1.0
    tol: Optional[float] = None
    max_iters: Optional[int] = None

    def __post_init__(self):
        GraphKind(self.graph)
        Criterion(self.criterion)
        if self.n < 1 or self.n_holdout < 1:
            raise ValueError(f"Invalid sample sizes: n={self.n}, n_holdout={self.n_holdout}")
        if self.reps < 1:
            raise ValueError(f"Invalid reps: {self.reps}")
        basis = self.basis_spec
        if basis.is_gaussian == self.copula:
            raise ValueError("The legendre family needs copula (unit-cube) data and the gaussian family needs none")
        if not basis.is_gaussian and Criterion(self.criterion) == Criterion.GAUSSIAN_NLL_HOLDOUT:
            raise ValueError("Held-out NLL is only available for the gaussian family")
        if self.solver not in ("cd", "admm", "ista"):
            raise ValueError(f"Invalid solver: {self.solver}")
        _ = self.path_spec  # grid options raise here

    @property
    def basis_spec(self) -> BasisSpec:
        return BasisSpec.from_dict({"kind": self.basis, "m1": self.m1, "m2": self.m2})

    @property
    def graph_spec(self) -> GraphModelSpec:
        return GraphModelSpec(kind=self.graph, d=self.d, p=self.p)

    @property
    def path_spec(self) -> PathSpec:
        return PathSpec(count=self.n_lambdas, ratio_min=self.lambda_min_ratio)

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"Unknown experiment fields: {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentConfig":
        with open(path) as f:
            payload = json.load(f)
        if not isinstance(payload, dict):
            raise InputFormatError(f"{path} does not hold a JSON object")
        return cls.from_dict(payload)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Replication:
    rep: int
    seed: int
    report: Optional[MetricReport] = None
    selected_lambda: Optional[float] = None
    edge_count: Optional[int] = None
    min_eigenvalue: Optional[float] = None
    iterations: int = 0
    elapsed: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ExperimentReport:
    """Per-replication results and their aggregate.

    ``aggregate`` holds the mean TP/TN/risk and the ROC averaged by grid
    position; ``sd`` holds the matching standard deviations.
    """

    config: ExperimentConfig
    replications: List[Replication] = field(default_factory=list)
    aggregate: MetricReport = field(default_factory=MetricReport)
    sd: Dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.replications)

    def summary(self) -> dict:
        return {
            "reps": self.config.reps,
            "failures": self.failures,
            "tp_mean": self.aggregate.tp_rate,
            "tp_sd": self.sd.get("tp"),
            "tn_mean": self.aggregate.tn_rate,
            "tn_sd": self.sd.get("tn"),
            "risk_mean": self.aggregate.heldout_risk,
            "risk_sd": self.sd.get("risk"),
            "auc_mean": self.aggregate.auc,
            "pd_selected": sum(1 for r in self.replications if r.min_eigenvalue is not None and r.min_eigenvalue > 0),
        }


def replication_seeds(seed: int, reps: int) -> List[int]:
    """Independent per-replication seeds spawned from the master seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(reps)]


def simulate_replication(config: ExperimentConfig, seed: int):
    """Graph, training set and holdout set of one replication."""
    rng = np.random.default_rng(seed)
    spec = config.graph_spec
    graph = random_graph(spec, rng)
    precision = random_precision(graph, spec, rng)
    if config.copula:
        train = copula_transform(copula_source(precision, config.n, rng))
        holdout = copula_transform(copula_source(precision, config.n_holdout, rng))
    else:
        train = Dataset(sample_gaussian(precision, config.n, rng)).standardize()
        holdout = Dataset(sample_gaussian(precision, config.n_holdout, rng)).standardize()
    return graph, train, holdout


def run_replication(config: ExperimentConfig, rep: int, seed: int) -> Replication:
    start = time.perf_counter()
    out = Replication(rep=rep, seed=seed)
    try:
        graph, train, holdout = simulate_replication(config, seed)
        path = fit_path(train, config.basis_spec, config.path_spec, holdout, solver=config.solver,
                        rho=config.rho, rel_tol=config.tol, max_iters=config.max_iters)
        criterion = Criterion(config.criterion)
        out.report = roc_curve(path, graph, criterion)
        choice = select_model(path, criterion)
    except (QuasrError, np.linalg.LinAlgError) as exc:
        log.warning("replication %d failed: %s", rep, exc)
        out.error = str(exc)
        out.elapsed = time.perf_counter() - start
        return out
    out.selected_lambda = choice.lam
    out.edge_count = path[choice.index].edge_count
    out.iterations = sum(e.iterations for e in path)
    if config.basis_spec.is_gaussian:
        out.min_eigenvalue = float(np.linalg.eigvalsh(choice.theta.to_precision())[0])
    out.elapsed = time.perf_counter() - start
    return out


def _mean_sd(values: List[float]):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def aggregate(config: ExperimentConfig, replications: List[Replication]) -> ExperimentReport:
    reports = [r.report for r in replications if r.ok]
    result = ExperimentReport(config=config, replications=replications)
    for name, attr in (("tp", "tp_rate"), ("tn", "tn_rate"), ("risk", "heldout_risk"), ("auc", "auc")):
        values = [getattr(rep, attr) for rep in reports if getattr(rep, attr) is not None]
        mean, sd = _mean_sd(values)
        result.sd[name] = sd
        setattr(result.aggregate, attr, mean)
    if reports:
        length = min(len(rep.roc) for rep in reports)
        result.aggregate.roc = [
            (float(np.mean([rep.roc[k][0] for rep in reports])), float(np.mean([rep.roc[k][1] for rep in reports])))
            for k in range(length)
        ]
        result.aggregate.lambdas = [float(np.mean([rep.lambdas[k] for rep in reports])) for k in range(length)]
    return result


def run_experiment(config: ExperimentConfig, n_jobs: int = 1, progress: bool = False) -> ExperimentReport:
    """Runs ``config.reps`` independent replications and aggregates their metrics.

    Results are gathered in replication order, so the report does not depend
    on ``n_jobs``.
    """
    seeds = replication_seeds(config.seed, config.reps)
    start = time.perf_counter()
    jobs = (delayed(run_replication)(config, rep, seed) for rep, seed in enumerate(seeds))
    if progress:
        jobs = tqdm(jobs, total=config.reps, desc="replications")
    replications = list(Parallel(n_jobs=n_jobs)(jobs))
    report = aggregate(config, replications)
    log.info("experiment: %d replications (%d failed) in %.2fs, TP=%s TN=%s", config.reps, report.failures,
             time.perf_counter() - start, report.aggregate.tp_rate, report.aggregate.tn_rate)
    return report
