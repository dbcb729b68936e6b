"""Prediction scores: RMSE and the Gaussian CRPS.

The CRPS here is negatively oriented: it is always below zero and rises to
zero as the predictive distribution concentrates on the observation. It is
the negative of the usual (positive) CRPS, ``crps_gaussian = -CRPS_std``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erf

from .gp import log_marginal_likelihood

VARIANCE_FLOOR = 1e-12
_INV_SQRT_PI = 1.0 / np.sqrt(np.pi)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass
class ScoreReport:
    rmse: float
    crps_mean: float
    log_likelihood: float
    n_test: int

    def to_dict(self) -> dict:
        return asdict(self)


def rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size == 0:
        raise ValueError("rmse of an empty set is undefined")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def norm_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def norm_cdf(z):
    return 0.5 * (1.0 + erf(np.asarray(z) / np.sqrt(2.0)))


def crps_gaussian(y, mu, sigma):
    """CRPS of ``N(mu, sigma^2)`` against observation ``y``.

    ``sigma * (1/sqrt(pi) - 2 pdf(z) - z (2 cdf(z) - 1))`` with
    ``z = (y - mu) / sigma``. Broadcasts over array arguments.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise ValueError("sigma must be strictly positive")
    z = (np.asarray(y, dtype=float) - mu) / sigma
    out = sigma * (_INV_SQRT_PI - 2.0 * norm_pdf(z) - z * (2.0 * norm_cdf(z) - 1.0))
    return float(out) if np.ndim(out) == 0 else out


def crps_mean(y_true, mean, variance) -> float:
    sd = np.sqrt(np.maximum(np.asarray(variance, dtype=float), VARIANCE_FLOOR))
    return float(np.mean(crps_gaussian(np.asarray(y_true, dtype=float), np.asarray(mean), sd)))


def score_set(y_true, summary, model=None, log_likelihood=None) -> ScoreReport:
    """Score a posterior summary against held-out values.

    The log marginal likelihood is taken from ``model`` (training data)
    unless passed in directly; without either it is reported as NaN.
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    if y_true.size != len(summary):
        raise ValueError(f"{y_true.size} targets for {len(summary)} predictions")
    if log_likelihood is None:
        if model is not None:
            log_likelihood = log_marginal_likelihood(model)
        else:
            log_likelihood = float("nan")
    return ScoreReport(
        rmse=rmse(y_true, summary.mean),
        crps_mean=crps_mean(y_true, summary.mean, summary.variance),
        log_likelihood=float(log_likelihood),
        n_test=int(y_true.size),
    )
