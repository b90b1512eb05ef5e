import logging
import time
from pathlib import Path

from args import resolve_threads
from data_modules.io import RunManifest, edge_rows, json_safe, read_matrix, write_edges, write_json, write_theta
from data_modules.statistics import StatsConfig, build_stats, gaussian_holdout_risk, hyvarinen_score
from models.basis import BasisSpec
from models.dataset import Dataset, Support
from opt_utils.path import (
    Criterion,
    PathSpec,
    SolverOptions,
    fit_path,
    fit_single,
    select_model,
    truncation_grid,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 3


def _basis(args) -> BasisSpec:
    if args.basis == "gaussian":
        return BasisSpec.gaussian()
    if args.truncation_grid is not None:
        return BasisSpec.legendre(args.truncation_grid, args.truncation_grid)
    if args.m1 is None or args.m2 is None:
        raise ValueError("--basis legendre needs --m1 and --m2 (or --truncation_grid)")
    return BasisSpec.legendre(args.m1, args.m2)


def _load(path, basis: BasisSpec, standardize: bool) -> Dataset:
    support = Support.REAL_LINE if basis.is_gaussian else Support.UNIT_CUBE
    data = Dataset(read_matrix(path), support)
    if basis.is_gaussian and standardize:
        data = data.standardize()
    return data


def _entry_row(entry) -> dict:
    return {
        "index": entry.index,
        "lambda": entry.lam,
        "truncation": entry.truncation,
        "edge_count": entry.edge_count,
        "train_score": entry.train_score,
        "holdout_score": entry.holdout_score,
        "holdout_nll": entry.holdout_nll,
        "iterations": entry.iterations,
        "kkt_residual": entry.kkt,
        "converged": entry.converged,
        "seeded_from": entry.seeded_from,
        "error": entry.error,
    }


def run_fit(args) -> int:
    """``quasr fit``: every input is validated before the output directory is touched."""
    manifest = RunManifest(command="fit", config=vars(args).copy(), seed=args.seed)
    start = time.perf_counter()
    basis = _basis(args)
    opts = SolverOptions(args.solver, args.rho, args.tol, args.max_iters, not args.no_penalize_vertices)
    if opts.solver == "cd" and not basis.is_gaussian:
        raise ValueError("--solver cd only fits the gaussian family")
    if args.criterion == "nll" and not basis.is_gaussian:
        raise ValueError("--criterion nll needs the gaussian family")
    if args.truncation_grid is not None and (basis.is_gaussian or not args.path):
        raise ValueError("--truncation_grid needs --basis legendre and --path")
    data = _load(args.data, basis, not args.no_standardize)
    holdout = _load(args.holdout, basis, not args.no_standardize) if args.holdout else None
    if holdout is not None and holdout.d != data.d:
        raise ValueError(f"Holdout has {holdout.d} columns, data has {data.d}")
    data.require_samples()
    stats_config = StatsConfig(n_jobs=resolve_threads(args))
    manifest.stage("load", time.perf_counter() - start)

    if args.path:
        if holdout is None:
            data, holdout = data.split(args.holdout_fraction, seed=args.seed)
        truncations = truncation_grid(args.truncation_grid) if args.truncation_grid else None
        spec = PathSpec(count=args.n_lambdas, ratio_min=args.lambda_min_ratio, truncations=truncations)
        tic = time.perf_counter()
        path = fit_path(data, basis, spec, holdout, solver=opts.solver, rho=opts.rho, rel_tol=opts.rel_tol,
                        max_iters=opts.max_iters, penalize_vertices=opts.penalize_vertices,
                        stats_config=stats_config, progress=args.progress)
        manifest.stage("fit", time.perf_counter() - tic)
        choice = select_model(path, Criterion(args.criterion))
        chosen = path[choice.index]
        theta, lam, chosen_basis = choice.theta, choice.lam, chosen.basis
        converged = path.converged
        diagnostics = {
            "selected": _entry_row(chosen),
            "criterion": args.criterion,
            "converged": converged,
            "entries": [_entry_row(e) for e in path],
        }
    else:
        tic = time.perf_counter()
        stats = build_stats(data, basis, stats_config)
        fit = fit_single(stats, args.lam, opts)
        manifest.stage("fit", time.perf_counter() - tic)
        theta, lam, chosen_basis, converged = fit.theta, fit.lam, basis, fit.converged
        diagnostics = dict(fit.summary())
        diagnostics["train_score"] = hyvarinen_score(theta, stats)
        if holdout is not None:
            diagnostics["holdout_score"] = hyvarinen_score(theta, build_stats(holdout, basis, stats_config))
            if basis.is_gaussian:
                diagnostics["holdout_nll"] = gaussian_holdout_risk(theta, holdout)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diagnostics["manifest"] = manifest.to_dict()
    write_theta(out / "theta.json", theta, chosen_basis, lam, manifest)
    write_edges(out / "edges.csv", theta)
    write_json(out / "diagnostics.json", json_safe(diagnostics))
    log.info("fit lambda=%.4g %s: %d edges, written to %s", lam, chosen_basis, len(edge_rows(theta)), out)
    if not converged:
        log.error("solver did not converge; outputs carry \"converged\": false")
        return EXIT_NOT_CONVERGED
    return EXIT_OK
