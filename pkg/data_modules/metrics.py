"""Edge-selection accuracy against a known graph."""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from sklearn.metrics import auc, confusion_matrix

from models.errors import CriterionUnavailableError, DimensionMismatchError
from models.graph import Graph
from models.params import edge_set_of
from opt_utils.path import Criterion, PathResult, select_model


@dataclass
class MetricReport:
    """True positive / true negative rates of an edge set and the ROC of a path.

    Args:
        tp_rate (Optional[float]): share of true edges found; None when the truth has no edge.
        tn_rate (Optional[float]): share of true non-edges left out; None when the truth is complete.
        roc (List[Tuple[float, float]]): (1 - TN, TP) per path entry, lambda descending.
        heldout_risk (Optional[float]): held-out criterion of the selected entry.
        auc (Optional[float]): area under ``roc`` anchored at (0, 0) and (1, 1).
        selected (Optional[int]): index into ``roc`` of the entry picked by ``select_model``.
        best_tp_tn (Optional[int]): index into ``roc`` maximizing TP + TN.
        lambdas (List[float]): lambda of every ``roc`` point.
    """

    tp_rate: Optional[float] = None
    tn_rate: Optional[float] = None
    roc: List[Tuple[float, float]] = field(default_factory=list)
    heldout_risk: Optional[float] = None
    auc: Optional[float] = None
    selected: Optional[int] = None
    best_tp_tn: Optional[int] = None
    lambdas: List[float] = field(default_factory=list)


def edge_metrics(estimated: Graph, truth: Graph) -> MetricReport:
    """TP = |E^ & E| / |E| and TN = |not E^ & not E| / |not E| over unordered pairs."""
    if estimated.d != truth.d:
        raise DimensionMismatchError(f"Graphs on {estimated.d} and {truth.d} vertices")
    pairs = list(truth.all_pairs())
    if not pairs:
        return MetricReport()
    y_true = [pair in truth for pair in pairs]
    y_pred = [pair in estimated for pair in pairs]
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[False, True]).ravel()
    tp_rate = float(tp / (tp + fn)) if tp + fn else None
    tn_rate = float(tn / (tn + fp)) if tn + fp else None
    return MetricReport(tp_rate=tp_rate, tn_rate=tn_rate)


def _point(report: MetricReport) -> Tuple[float, float]:
    # undefined rates sit on the trivial corner
    tp = 0.0 if report.tp_rate is None else report.tp_rate
    tn = 1.0 if report.tn_rate is None else report.tn_rate
    return 1.0 - tn, tp


def roc_curve(path: PathResult, truth: Graph, criterion: Criterion = Criterion.HYVARINEN_HOLDOUT) -> MetricReport:
    """One ROC point per successful path entry, ordered by lambda descending.

    TP/TN rates and held-out risk of the report are those of the entry chosen
    by ``select_model(path, criterion)``.
    """
    if len(path) == 0:
        raise ValueError("Cannot trace the ROC of an empty path")
    entries = sorted((e for e in path if e.ok), key=lambda e: (-e.lam, e.index))
    reports = [edge_metrics(edge_set_of(e.theta), truth) for e in entries]
    roc = [_point(r) for r in reports]

    report = MetricReport(roc=roc, lambdas=[e.lam for e in entries])
    if roc:
        fpr, tpr = zip(*sorted([(0.0, 0.0)] + roc + [(1.0, 1.0)]))
        report.auc = float(auc(fpr, tpr))
        scores = [(tp + (1.0 - fp)) for fp, tp in roc]
        report.best_tp_tn = int(np.argmax(scores))

    try:
        choice = select_model(path, criterion)
    except CriterionUnavailableError:
        return report
    position = next(k for k, e in enumerate(entries) if e.index == choice.index)
    chosen = entries[position]
    report.selected = position
    report.tp_rate = reports[position].tp_rate
    report.tn_rate = reports[position].tn_rate
    if Criterion(criterion) == Criterion.GAUSSIAN_NLL_HOLDOUT:
        report.heldout_risk = chosen.holdout_nll
    else:
        report.heldout_risk = chosen.holdout_score
    return report
