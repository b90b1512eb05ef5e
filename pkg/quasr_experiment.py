import logging
import time
from pathlib import Path

from pytorch_lightning.loggers import WandbLogger

from args import resolve_threads
from data_modules.experiment import ExperimentConfig, ExperimentReport, run_experiment
from data_modules.io import RunManifest, json_safe, write_csv, write_json

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["rep", "seed", "tp_rate", "tn_rate", "heldout_risk", "auc", "selected_lambda", "edge_count",
                  "min_eigenvalue", "iterations", "error"]
ROC_COLUMNS = ["position", "lambda", "fpr", "tpr"]


def metric_rows(report: ExperimentReport):
    for r in report.replications:
        m = r.report
        yield [
            r.rep,
            r.seed,
            m.tp_rate if m else None,
            m.tn_rate if m else None,
            m.heldout_risk if m else None,
            m.auc if m else None,
            r.selected_lambda,
            r.edge_count,
            r.min_eigenvalue,
            r.iterations,
            r.error,
        ]


def roc_rows(report: ExperimentReport):
    agg = report.aggregate
    return [[k, lam, fpr, tpr] for k, (lam, (fpr, tpr)) in enumerate(zip(agg.lambdas, agg.roc))]


def run_experiment_cmd(args) -> int:
    """``quasr experiment``: metrics.csv, roc.csv and summary.json.

    metrics.csv and roc.csv carry no timing or timestamp, so equal seeds give
    byte-identical files.
    """
    config = ExperimentConfig.from_json(args.descriptor)
    if args.seed is not None:
        config.seed = args.seed
    manifest = RunManifest(command="experiment", config=config.to_dict(), seed=config.seed)

    wandb_logger = None
    if args.wandb:
        wandb_logger = WandbLogger(name=args.name, project=args.project, entity=args.entity, offline=args.offline)
        wandb_logger.log_hyperparams(config.to_dict())

    tic = time.perf_counter()
    report = run_experiment(config, n_jobs=resolve_threads(args), progress=args.progress)
    manifest.stage("experiment", time.perf_counter() - tic)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "metrics.csv", METRIC_COLUMNS, metric_rows(report))
    write_csv(out / "roc.csv", ROC_COLUMNS, roc_rows(report))
    summary = report.summary()
    write_json(out / "summary.json", json_safe({"summary": summary, "manifest": manifest.to_dict()}))

    if wandb_logger is not None:
        wandb_logger.log_metrics({k: v for k, v in summary.items() if isinstance(v, (int, float))})
        wandb_logger.log_table(key="roc", columns=ROC_COLUMNS, data=roc_rows(report))
    log.info("experiment done: %d/%d replications ok -> %s", config.reps - report.failures, config.reps, out)
    return 0
