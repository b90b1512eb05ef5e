import numpy as np
import pytest

from data_modules.metrics import edge_metrics, roc_curve
from data_modules.simulate import GraphModelSpec, gen_copula_graph, gen_gaussian_graph
from models.basis import BasisSpec
from models.errors import DimensionMismatchError
from models.graph import Graph
from opt_utils.path import Criterion, PathSpec, fit_path, select_model


def test_edge_metrics_examples():
    truth = Graph.from_edges(3, [(0, 1)])
    report = edge_metrics(Graph.from_edges(3, [(0, 1), (0, 2)]), truth)
    assert (report.tp_rate, report.tn_rate) == (1.0, 0.5)
    report = edge_metrics(truth, truth)
    assert (report.tp_rate, report.tn_rate) == (1.0, 1.0)
    report = edge_metrics(Graph(3), truth)
    assert (report.tp_rate, report.tn_rate) == (0.0, 1.0)


def test_edge_metrics_undefined_rates():
    report = edge_metrics(Graph.from_edges(3, [(0, 1)]), Graph(3))
    assert report.tp_rate is None
    assert report.tn_rate == pytest.approx(2.0 / 3.0)
    complete = Graph.from_edges(2, [(0, 1)])
    assert edge_metrics(complete, complete).tn_rate is None
    with pytest.raises(DimensionMismatchError):
        edge_metrics(Graph(3), Graph(4))


def _gaussian_path(seed, d=8, n=300):
    sim = gen_gaussian_graph(GraphModelSpec(kind="tree", d=d), 2 * n, seed=seed)
    train, holdout = sim.data.subset(np.arange(n)), sim.data.subset(np.arange(n, 2 * n))
    path = fit_path(train, BasisSpec.gaussian(), PathSpec(count=12), holdout, solver="cd")
    return path, sim.graph


def test_roc_curve_on_gaussian_path():
    path, truth = _gaussian_path(seed=12)
    report = roc_curve(path, truth, Criterion.GAUSSIAN_NLL_HOLDOUT)
    assert len(report.roc) == len(path)
    assert report.roc[0] == (0.0, 0.0)
    assert report.lambdas == sorted(report.lambdas, reverse=True)
    assert all(0.0 <= fpr <= 1.0 and 0.0 <= tpr <= 1.0 for fpr, tpr in report.roc)
    assert 0.0 <= report.auc <= 1.0

    choice = select_model(path, Criterion.GAUSSIAN_NLL_HOLDOUT)
    assert report.lambdas[report.selected] == choice.lam
    assert report.heldout_risk == path[choice.index].holdout_nll
    assert report.roc[report.selected] == (1.0 - report.tn_rate, report.tp_rate)


def test_dense_fit_finds_every_edge():
    path, truth = _gaussian_path(seed=13, d=6, n=2000)
    report = roc_curve(path, truth)
    assert report.roc[-1][1] == 1.0
    tprs = [tpr for _, tpr in report.roc]
    assert sum(b < a for a, b in zip(tprs, tprs[1:])) <= 1


def test_roc_without_nll_has_no_selection():
    sim = gen_copula_graph(GraphModelSpec(kind="tree", d=4), 200, seed=2)
    train, holdout = sim.data.subset(np.arange(100)), sim.data.subset(np.arange(100, 200))
    path = fit_path(train, BasisSpec.legendre(1, 1), PathSpec(count=4), holdout)
    report = roc_curve(path, sim.graph, Criterion.GAUSSIAN_NLL_HOLDOUT)
    assert report.selected is None
    assert report.tp_rate is None
    assert len(report.roc) == 4
