import csv
import json

import numpy as np
import pytest

from nsgp.cli import main, parse_grid, UsageError
from nsgp.io import load_model, read_predictions
from nsgp.optimize import read_trace_csv


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    out = tmp_path_factory.mktemp("fit_stat")
    assert run("fit", "--dataset", "synth", "--kernel", "stationary", "--iterations", 20,
               "--seed", 1, "--out", out) == 0
    return out


def test_fit_writes_artifacts(fitted):
    report = json.loads((fitted / "report.json").read_text())
    assert report["hyper_count"] == 2
    assert report["score"]["n_test"] == 1000
    assert report["score"]["crps_mean"] < 0
    assert len(read_trace_csv(fitted / "trace.csv")) >= 2
    model, norm = load_model(fitted / "model.json")
    assert model.kernel.family == "matern32" and model.n_data == 50


def test_fit_parametric_hyper_count(tmp_path):
    assert run("fit", "--dataset", "synth", "--kernel", "parametric", "--iterations", 2,
               "--out", tmp_path) == 0
    assert json.loads((tmp_path / "report.json").read_text())["hyper_count"] == 15


def test_fit_mcmc(tmp_path):
    assert run("fit", "--dataset", "synth", "--kernel", "stationary", "--optimizer", "mcmc",
               "--iterations", 200, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "report.json").read_text())["optimizer"] == "mcmc"


def test_invalid_kernel_is_usage_error(tmp_path, capsys):
    assert run("fit", "--dataset", "synth", "--kernel", "spectral", "--out", tmp_path) == 2


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as info:
        run("fit", "--optimizer", "lbfgs")
    assert info.value.code == 2


def test_missing_dataset_file(tmp_path):
    assert run("fit", "--dataset", tmp_path / "nope.csv", "--kernel", "stationary",
               "--out", tmp_path) == 3


def test_predict_grid_rows(fitted, tmp_path):
    assert run("predict", "--model", fitted / "model.json", "--grid", "0:1:101", "--out", tmp_path) == 0
    pred = read_predictions(tmp_path / "predictions.csv")
    assert pred["x"].shape == (101, 1)
    assert np.all(pred["post_var"] >= 0)


def test_predict_at_training_point_of_noise_free_model(tmp_path):
    data = tmp_path / "clean.csv"
    xs = np.linspace(0, 1, 8)
    data.write_text("".join(f"{float(x)!r},{float(np.sin(4 * x))!r}\n" for x in xs))
    assert run("fit", "--dataset", data, "--kernel", "stationary", "--iterations", 5,
               "--test-fraction", 0.25, "--out", tmp_path / "m") == 0
    model, norm = load_model(tmp_path / "m" / "model.json")
    assert model.fixed_noise == 0.0
    q = tmp_path / "q.csv"
    xtrain = norm.denormalize_x(model.x_data)
    q.write_text("x1\n" + "".join(f"{float(x)!r}\n" for x in xtrain[:, 0]))
    assert run("predict", "--model", tmp_path / "m" / "model.json", "--query", q, "--out", tmp_path) == 0
    pred = read_predictions(tmp_path / "predictions.csv")
    assert np.all(pred["post_var"] <= 1e-8)


def test_predict_3d_slice(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(40, 3))
    y = np.sin(3 * x[:, 0]) + x[:, 1] * x[:, 2]
    data = tmp_path / "d3.csv"
    with data.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "c", "y"])
        w.writerows(np.column_stack([x, y]).tolist())
    assert run("fit", "--dataset", data, "--kernel", "stationary", "--iterations", 3,
               "--out", tmp_path / "m") == 0
    assert json.loads((tmp_path / "m" / "report.json").read_text())["hyper_count"] == 3
    assert run("predict", "--model", tmp_path / "m" / "model.json", "--grid", "0:1:5,0:1:4,0.5",
               "--out", tmp_path) == 0
    pred = read_predictions(tmp_path / "predictions.csv")
    assert pred["x"].shape == (20, 3)
    np.testing.assert_array_equal(pred["x"][:, 2], 0.5)
    assert run("predict", "--model", tmp_path / "m" / "model.json", "--grid", "0:1:5",
               "--out", tmp_path) == 2


def test_predict_query_dimension_mismatch(fitted, tmp_path):
    q = tmp_path / "q.csv"
    q.write_text("0.1\n")
    model3 = tmp_path / "q3.csv"
    model3.write_text("0.1,0.2\n")
    assert run("predict", "--model", fitted / "model.json", "--query", q, "--out", tmp_path) == 0
    # a 1-D model reads only the first column; an empty row set is a data error
    empty = tmp_path / "empty.csv"
    empty.write_text("x\n")
    assert run("predict", "--model", fitted / "model.json", "--query", empty, "--out", tmp_path) == 3


def test_score_command(fitted, tmp_path):
    test = tmp_path / "t.csv"
    test.write_text("x,y\n0.2,0.5\n0.6,0.7\n")
    assert run("score", "--model", fitted / "model.json", "--test", test, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "score.json").read_text())
    assert rep["n_test"] == 2 and rep["crps_mean"] < 0


def test_compare_single_kernel_is_usage_error(tmp_path):
    assert run("compare", "--dataset", "synth", "--kernel", "stationary", "--out", tmp_path) == 2


def test_compare_tables_reproducible(tmp_path):
    tables = []
    for sub in ("a", "b"):
        assert run("compare", "--dataset", "synth", "--kernel", "stationary,parametric,hybrid",
                   "--iterations", 3, "--seed", 2, "--out", tmp_path / sub) == 0
        doc = json.loads((tmp_path / sub / "comparison.json").read_text())
        for k in doc["kernels"]:
            k.pop("wall_seconds")
        tables.append(doc)
        assert (tmp_path / sub / "parametric" / "trace.csv").exists()
    assert tables[0] == tables[1]
    assert [k["hyper_count"] for k in tables[0]["kernels"]] == [2, 15, 61]
    with (tmp_path / "a" / "comparison.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["kernel"] for r in rows] == ["stationary", "parametric", "hybrid"]
    assert all(r["status"] == "ok" for r in rows)


def test_measure_command(tmp_path):
    assert run("measure", "--dataset", "synth:linear", "--iterations", 1, "--mcmc-iterations", 200,
               "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "nonstationarity.json").read_text())
    assert len(rep["signal_variance_means"]) == 1
    assert rep["spread"]["signal_variance"]["std"] == 0.0
    with (tmp_path / "nonstationarity.csv").open() as fh:
        assert next(csv.reader(fh)) == ["iteration", "signal_variance_mean", "length_scale_mean"]


def test_synth_command_and_config(tmp_path):
    assert run("synth", "--kind", "trig", "--n-points", 30, "--out", tmp_path) == 0
    rows = (tmp_path / "trig.csv").read_text().splitlines()
    assert rows[0] == "x1,y" and len(rows) == 31
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": str(tmp_path / "trig.csv"), "kernel": "rbf",
                               "iterations": 2, "out": str(tmp_path / "fromcfg")}))
    assert run("fit", "--config", cfg) == 0
    assert json.loads((tmp_path / "fromcfg" / "report.json").read_text())["kernel"] == "rbf"
    # flags win over the file
    assert run("fit", "--config", cfg, "--kernel", "exponential") == 0
    assert json.loads((tmp_path / "fromcfg" / "report.json").read_text())["kernel"] == "exponential"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("fit", "--config", cfg) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NSGP_OUT", str(tmp_path / "env"))
    assert run("synth", "--n-points", 5) == 0
    assert (tmp_path / "env" / "synth_1d.csv").exists()


def test_parse_grid():
    g = parse_grid("0:1:3,2", 2)
    np.testing.assert_array_equal(g, [[0, 2], [0.5, 2], [1, 2]])
    with pytest.raises(UsageError):
        parse_grid("0:1", 1)


def test_compare_warm_start_flag(tmp_path):
    assert run("compare", "--dataset", "synth", "--kernel", "stationary,deep", "--iterations", 2,
               "--warm-start", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert [k["hyper_count"] for k in doc["kernels"]] == [2, 48]
