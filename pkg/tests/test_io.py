import json

import numpy as np
import pytest

from nsgp.data import synth_1d
from nsgp.gp import GpModel, posterior
from nsgp.io import load_model, model_from_dict, read_predictions, save_model, write_predictions
from nsgp.kernels import default_hypers, preset_kernel


@pytest.mark.parametrize("name", ["stationary", "parametric", "deep", "hybrid"])
def test_model_roundtrip_predicts_identically(tmp_path, name):
    ds = synth_1d(12, 0.001, seed=0)
    spec = preset_kernel(name, 1)
    model = GpModel(ds.x, ds.y, spec, default_hypers(spec), fixed_noise=ds.noise_variance)
    path = tmp_path / "model.json"
    save_model(path, model, ds.normalization, ds.name)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"kernel", "hypers", "prior_mean", "normalization", "fixed_noise"}
    assert [s["name"] for s in doc["hypers"]["layout"]] == [s.name for s in model.hypers.layout]
    loaded, norm = load_model(path)
    xq = np.linspace(0, 1, 9)[:, None]
    a, b = posterior(model, xq), posterior(loaded, xq)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.variance, b.variance)
    assert norm.y_min == ds.normalization.y_min


def test_rejects_foreign_documents():
    with pytest.raises(ValueError):
        model_from_dict({"format": "other"})
    with pytest.raises(ValueError):
        model_from_dict({"format": "nsgp-model", "version": 99})


def test_predictions_csv_roundtrip(tmp_path):
    x = np.array([[0.0, 1.0], [0.5, 2.0]])
    write_predictions(tmp_path / "p.csv", x, [1.0, 2.0], [0.1, 0.2])
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "x1,x2,post_mean,post_var"
    p = read_predictions(tmp_path / "p.csv")
    np.testing.assert_array_equal(p["x"], x)
    np.testing.assert_array_equal(p["post_var"], [0.1, 0.2])
