import csv
import json

import numpy as np
import pytest

import quasr_fit
from data_modules.io import read_matrix, read_theta
from data_modules.statistics import gaussian_holdout_risk
from main_quasr import main
from models.dataset import Dataset


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def _simulate(out, *extra):
    return main(["simulate", "--graph", "tree", "--d", "10", "--n", "60", "--seed", "5", "--out", str(out), *extra])


def test_simulate_writes_reproducible_files(tmp_path):
    assert _simulate(tmp_path / "a") == 0
    assert _simulate(tmp_path / "b") == 0
    assert len(_rows(tmp_path / "a" / "truth_edges.csv")) == 1 + 9
    assert len(_rows(tmp_path / "a" / "data.csv")) == 1 + 60
    assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()
    assert (tmp_path / "a" / "precision.csv").read_bytes() == (tmp_path / "b" / "precision.csv").read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "simulate"


def test_simulate_copula(tmp_path):
    assert _simulate(tmp_path, "--copula") == 0
    values = np.asarray(_rows(tmp_path / "data.csv")[1:], dtype=float)
    assert values.min() > 0.0 and values.max() < 1.0


def test_fit_above_lambda_start_is_empty(tmp_path):
    _simulate(tmp_path / "sim")
    out = tmp_path / "fit"
    assert main(["fit", str(tmp_path / "sim" / "data.csv"), "--lambda", "1.5", "--out", str(out)]) == 0
    theta = json.loads((out / "theta.json").read_text())
    assert theta["edges"] == {}
    assert all(v == [0.0] for v in theta["vertices"].values())
    assert _rows(out / "edges.csv") == [["i", "j", "group_norm"]]
    diagnostics = json.loads((out / "diagnostics.json").read_text())
    assert diagnostics["converged"] is True
    assert diagnostics["edge_count"] == 0


def test_fit_rejects_malformed_input_before_writing(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    out = tmp_path / "never"
    assert main(["fit", str(bad), "--lambda", "0.1", "--out", str(out)]) == 2
    assert not out.exists()
    assert main(["fit", str(tmp_path / "missing.csv"), "--path", "--out", str(out)]) == 2
    assert not out.exists()


def test_fit_rejects_incompatible_options(tmp_path):
    _simulate(tmp_path / "sim")
    data = str(tmp_path / "sim" / "data.csv")
    out = tmp_path / "never"
    assert main(["fit", data, "--path", "--basis", "legendre", "--m1", "1", "--m2", "1", "--solver", "cd",
                 "--out", str(out)]) == 2
    assert main(["fit", data, "--path", "--basis", "legendre", "--m1", "1", "--m2", "1", "--criterion", "nll",
                 "--out", str(out)]) == 2
    assert not out.exists()
    with pytest.raises(SystemExit):
        main(["fit", data])


def test_fit_gaussian_path(tmp_path):
    _simulate(tmp_path / "sim")
    out = tmp_path / "path"
    code = main(["fit", str(tmp_path / "sim" / "data.csv"), "--path", "--solver", "cd", "--criterion", "nll",
                 "--n_lambdas", "5", "--out", str(out)])
    assert code == 0
    diagnostics = json.loads((out / "diagnostics.json").read_text())
    assert len(diagnostics["entries"]) == 5
    assert diagnostics["entries"][0]["edge_count"] == 0
    assert diagnostics["selected"]["holdout_nll"] is not None
    theta = json.loads((out / "theta.json").read_text())
    assert theta["lambda"] == diagnostics["selected"]["lambda"]


def test_fit_legendre_truncation_path(tmp_path):
    _simulate(tmp_path / "sim", "--copula")
    holdout = tmp_path / "holdout"
    main(["simulate", "--graph", "tree", "--d", "10", "--n", "60", "--seed", "6", "--copula", "--out", str(holdout)])
    out = tmp_path / "fit"
    code = main(["fit", str(tmp_path / "sim" / "data.csv"), "--basis", "legendre", "--truncation_grid", "2",
                 "--path", "--n_lambdas", "3", "--holdout", str(holdout / "data.csv"), "--out", str(out)])
    assert code in (0, 3)
    diagnostics = json.loads((out / "diagnostics.json").read_text())
    assert [e["truncation"] for e in diagnostics["entries"]] == [[1, 1]] * 3 + [[2, 2]] * 3
    assert diagnostics["converged"] is (code == 0)


def _descriptor(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"graph": "tree", "d": 5, "n": 60, "n_holdout": 60, "reps": 2, "n_lambdas": 5,
                                "seed": 11}))
    return path


def test_experiment_outputs(tmp_path):
    out = tmp_path / "exp"
    assert main(["experiment", str(_descriptor(tmp_path)), "--out", str(out)]) == 0
    metrics = _rows(out / "metrics.csv")
    assert len(metrics) == 1 + 2
    assert metrics[0][:4] == ["rep", "seed", "tp_rate", "tn_rate"]
    roc = _rows(out / "roc.csv")
    assert roc[0] == ["position", "lambda", "fpr", "tpr"]
    assert float(roc[1][3]) == 0.0
    summary = json.loads((out / "summary.json").read_text())["summary"]
    assert 0.0 <= summary["tp_mean"] <= 1.0


def test_experiment_is_byte_reproducible(tmp_path):
    descriptor = str(_descriptor(tmp_path))
    for name in ("a", "b"):
        assert main(["experiment", descriptor, "--deterministic", "--seed", "4", "--out", str(tmp_path / name)]) == 0
    for name in ("metrics.csv", "roc.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_experiment_bad_descriptor(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["experiment", str(bad), "--out", str(tmp_path / "x")]) == 2
    bad.write_text(json.dumps({"graph": "tree", "basis": "legendre", "m1": 1, "m2": 1}))
    assert main(["experiment", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()


def test_fit_passes_thread_count_to_statistics(tmp_path, monkeypatch):
    seen = []
    original = quasr_fit.fit_path

    def recording(*args, **kwargs):
        seen.append(kwargs["stats_config"].n_jobs)
        return original(*args, **kwargs)

    monkeypatch.setattr(quasr_fit, "fit_path", recording)
    _simulate(tmp_path / "sim", "--copula")
    command = ["fit", str(tmp_path / "sim" / "data.csv"), "--basis", "legendre", "--m1", "1", "--m2", "1", "--path",
               "--n_lambdas", "3"]
    main(command + ["--threads", "2", "--out", str(tmp_path / "a")])
    monkeypatch.setenv("QUASR_THREADS", "3")
    main(command + ["--out", str(tmp_path / "b")])
    main(command + ["--deterministic", "--out", str(tmp_path / "c")])
    assert seen == [2, 3, 1]
    threaded = _rows(tmp_path / "a" / "edges.csv")
    serial = _rows(tmp_path / "c" / "edges.csv")
    assert [row[:2] for row in threaded] == [row[:2] for row in serial]
    np.testing.assert_allclose([float(r[2]) for r in threaded[1:]], [float(r[2]) for r in serial[1:]], rtol=1e-8)


def test_fit_single_lambda_reports_holdout_nll(tmp_path):
    _simulate(tmp_path / "sim")
    holdout = tmp_path / "holdout"
    main(["simulate", "--graph", "tree", "--d", "10", "--n", "60", "--seed", "6", "--out", str(holdout)])
    out = tmp_path / "fit"
    code = main(["fit", str(tmp_path / "sim" / "data.csv"), "--lambda", "0.5", "--solver", "cd",
                 "--holdout", str(holdout / "data.csv"), "--out", str(out)])
    assert code == 0
    diagnostics = json.loads((out / "diagnostics.json").read_text())
    expected = gaussian_holdout_risk(read_theta(out / "theta.json"),
                                     Dataset(read_matrix(holdout / "data.csv")).standardize())
    assert np.isfinite(expected)
    assert diagnostics["holdout_nll"] == pytest.approx(expected)
