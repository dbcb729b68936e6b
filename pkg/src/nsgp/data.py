"""Datasets: normalization to the unit cube, synthetic signals, CSV input."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


def latent_1d(x):
    """Noise-free 1-D test function; maps [0, 1] into [0, 1]."""
    x = np.asarray(x, dtype=float)
    out = (np.sin(5 * x) + np.cos(10 * x) + 2 * (x - 0.4) ** 2 * np.cos(100 * x) + 2.597) / 3.94
    return float(out) if out.ndim == 0 else out


def linear_signal(x):
    return np.asarray(x, dtype=float)


def trig_signal(x):
    """Oscillation with constant amplitude and frequency."""
    return np.sin(30.0 * np.asarray(x, dtype=float))


def trig_varying_signal(x):
    """Oscillation whose amplitude and frequency both grow along the axis."""
    x = np.asarray(x, dtype=float)
    return (0.1 + 2.0 * x) * np.sin(4.0 * np.pi * x + 20.0 * x**2)


@dataclass(frozen=True)
class Normalization:
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float
    y_max: float

    @property
    def x_range(self) -> np.ndarray:
        return self.x_max - self.x_min

    @property
    def y_range(self) -> float:
        return self.y_max - self.y_min

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Normalization":
        return cls(x.min(axis=0), x.max(axis=0), float(y.min()), float(y.max()))

    @classmethod
    def identity(cls, dim: int) -> "Normalization":
        return cls(np.zeros(dim), np.ones(dim), 0.0, 1.0)

    def _scale(self, lo, span, v):
        span = np.asarray(span, dtype=float)
        const = span == 0
        out = (v - lo) / np.where(const, 1.0, span)
        return np.where(const, 0.5, out)

    def normalize_x(self, x):
        return self._scale(self.x_min, self.x_range, np.asarray(x, dtype=float))

    def normalize_y(self, y):
        return self._scale(self.y_min, self.y_range, np.asarray(y, dtype=float))

    def denormalize_x(self, x):
        return np.asarray(x, dtype=float) * self.x_range + self.x_min

    def denormalize_y(self, y):
        return np.asarray(y, dtype=float) * self.y_range + self.y_min

    def denormalize_variance(self, var):
        return np.asarray(var, dtype=float) * self.y_range**2

    def to_dict(self) -> dict:
        return {"x_min": self.x_min.tolist(), "x_max": self.x_max.tolist(),
                "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalization":
        return cls(np.array(d["x_min"], dtype=float), np.array(d["x_max"], dtype=float),
                   float(d["y_min"]), float(d["y_max"]))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Normalized inputs and outputs plus the map back to original units.

    ``noise_variance`` is the known observation-noise variance in
    normalized units, when the generator knows it. ``latent`` is the
    noise-free function in original units, for synthetic data only.
    """

    x: np.ndarray
    y: np.ndarray
    normalization: Normalization
    name: str = "data"
    noise_variance: Optional[float] = None
    latent: Optional[Callable] = field(default=None, repr=False)
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def raw_x(self) -> np.ndarray:
        return self.normalization.denormalize_x(self.x)

    def raw_y(self) -> np.ndarray:
        return self.normalization.denormalize_y(self.y)

    def subset(self, idx, name: Optional[str] = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.x[idx], self.y[idx], self.normalization, name or self.name,
                       self.noise_variance, self.latent)

    def latent_grid(self, n_points: int = 1000) -> tuple[np.ndarray, np.ndarray]:
        """Dense regular grid over the unit interval with normalized latent values."""
        if self.latent is None:
            raise DataError(f"dataset {self.name!r} has no latent function")
        if self.dim != 1:
            raise DataError("latent grids are only provided for 1-D data")
        xg = np.linspace(0.0, 1.0, n_points)[:, None]
        raw = self.normalization.denormalize_x(xg)[:, 0]
        return xg, self.normalization.normalize_y(self.latent(raw))


def from_arrays(x, y, name: str = "data", noise_variance_raw: Optional[float] = None,
                latent: Optional[Callable] = None, dropped_rows: int = 0) -> Dataset:
    """Normalize raw arrays into a :class:`Dataset`."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.size or y.size == 0:
        raise DataError("x and y must have the same, non-zero number of rows")
    norm = Normalization.fit(x, y)
    if np.any(norm.x_range == 0) or norm.y_range == 0:
        warnings.warn(f"{name}: constant column normalized to 0.5", RuntimeWarning, stacklevel=2)
    noise = None
    if noise_variance_raw is not None:
        noise = noise_variance_raw / norm.y_range**2 if norm.y_range > 0 else noise_variance_raw
    return Dataset(norm.normalize_x(x), norm.normalize_y(y), norm, name, noise, latent, dropped_rows)


def synth_1d(n_points: int = 50, noise_std_sq: float = 0.001, seed=None) -> Dataset:
    """Random draws of :func:`latent_1d` with additive Gaussian noise."""
    if n_points < 1:
        raise DataError("n_points must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, n_points)
    y = latent_1d(x) + rng.normal(0.0, math.sqrt(noise_std_sq), n_points)
    return from_arrays(x, y, "synth_1d", noise_variance_raw=noise_std_sq, latent=latent_1d)


SIGNALS = {
    "linear": linear_signal,
    "trig": trig_signal,
    "trig_varying": trig_varying_signal,
    "synth_1d": latent_1d,
}


def synth_signal(kind: str, n_points: int = 500, noise_std_sq: float = 0.0, seed=None) -> Dataset:
    """Sample one of the named 1-D signals at uniform random locations."""
    if kind not in SIGNALS:
        raise DataError(f"unknown signal {kind!r}; choose from {sorted(SIGNALS)}")
    rng = np.random.default_rng(seed)
    f = SIGNALS[kind]
    x = np.sort(rng.uniform(0.0, 1.0, n_points))
    y = f(x)
    if noise_std_sq > 0:
        y = y + rng.normal(0.0, math.sqrt(noise_std_sq), n_points)
    return from_arrays(x, y, kind, noise_variance_raw=noise_std_sq, latent=f)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path, n_input_columns: int) -> Dataset:
    """Read a comma-separated table: input columns first, then the output.

    A non-numeric first row is treated as a header. Rows holding non-finite
    values are dropped (see ``Dataset.dropped_rows``); columns past
    ``n_input_columns + 1`` are ignored.
    """
    path = Path(path)
    need = n_input_columns + 1
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if rows and not all(_is_number(c) for c in rows[0][:need]):
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    values, dropped = [], 0
    for lineno, row in enumerate(rows, start=first_line):
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        if len(row) < need:
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, need {need}")
        try:
            vals = [float(c) for c in row[:need]]
        except ValueError:
            raise DataError(f"{path}: row {lineno} is not numeric") from None
        if not all(math.isfinite(v) for v in vals):
            dropped += 1
            continue
        values.append(vals)
    if not values:
        raise DataError(f"{path}: no valid rows")
    arr = np.array(values)
    return from_arrays(arr[:, :n_input_columns], arr[:, n_input_columns], name=path.stem,
                       dropped_rows=dropped)


def train_test_split(ds: Dataset, test_fraction: float = 0.2, seed=None) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie strictly between 0 and 1")
    n_test = int(round(test_fraction * ds.n))
    if n_test == 0 or n_test == ds.n:
        raise DataError(f"test_fraction {test_fraction} leaves an empty side for N={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[n_test:]), ds.name + "_train"), \
        ds.subset(np.sort(perm[:n_test]), ds.name + "_test")
