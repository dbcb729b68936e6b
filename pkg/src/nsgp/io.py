"""JSON model documents and CSV helpers."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .data import Normalization
from .gp import GpModel
from .kernels import HyperVector, KernelSpec

MODEL_FORMAT = "nsgp-model"
MODEL_VERSION = 1


def model_to_dict(model: GpModel, normalization: Normalization, dataset: str = "") -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dataset": dataset,
        "kernel": model.kernel.to_dict(),
        "hypers": model.hypers.to_dict(),
        "prior_mean": model.prior_mean,
        "fixed_noise": model.fixed_noise,
        "normalization": normalization.to_dict(),
        "x_data": model.x_data.tolist(),
        "y_data": model.y_data.tolist(),
    }


def model_from_dict(d: dict) -> tuple[GpModel, Normalization]:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not an nsgp model document")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    spec = KernelSpec.from_dict(d["kernel"])
    model = GpModel(np.array(d["x_data"], dtype=float), np.array(d["y_data"], dtype=float),
                    spec, HyperVector.from_dict(d["hypers"]),
                    prior_mean=float(d["prior_mean"]), fixed_noise=float(d["fixed_noise"]))
    return model, Normalization.from_dict(d["normalization"])


def save_model(path, model: GpModel, normalization: Normalization, dataset: str = "") -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, normalization, dataset), indent=2))


def load_model(path) -> tuple[GpModel, Normalization]:
    return model_from_dict(json.loads(Path(path).read_text()))


def write_predictions(path, x, mean, variance) -> None:
    x = np.asarray(x, dtype=float)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(x.shape[1])] + ["post_mean", "post_var"])
        for row, m, v in zip(x, mean, variance):
            w.writerow([repr(float(c)) for c in row] + [repr(float(m)), repr(float(v))])


def read_predictions(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(c) for c in r] for r in reader])
    if header[-2:] != ["post_mean", "post_var"]:
        raise ValueError(f"{path}: unexpected header {header}")
    rows = rows.reshape(-1, len(header))
    return {"x": rows[:, :-2], "post_mean": rows[:, -2], "post_var": rows[:, -1]}
