"""Non-stationarity diagnostic from local stationary-GP fits.

Random local subsets of a dataset are fitted with an isotropic Matern 3/2
GP by MCMC. For a stationary signal the posterior-mean signal variance and
length scale barely change from subset to subset; for a non-stationary one
they spread out. The spread is the diagnostic.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset
from .gp import GpModel, log_marginal_likelihood
from .kernels import KernelSpec, hyper_layout, HyperVector
from .optimize import McmcConfig, SearchSpace, mcmc_sample

SUBSET_NUGGET = 1e-4
SIGMA_BOUNDS = (1e-3, 1.0)
LENGTH_BOUNDS = (1e-3, 1.0)
MAX_REDRAWS = 100

# coefficient-of-variation cut points, see classify_spread. Calibrated on
# 100-iteration runs: a linear trend and a constant-frequency sine give
# cv <= 0.30, while signals with drifting amplitude and frequency give 0.6-0.7.
WEAK_CV = 0.35
STRONG_CV = 0.5

LIKELY_STATIONARY = "likely-stationary"
WEAKLY_NONSTATIONARY = "weakly-nonstationary"
STRONGLY_NONSTATIONARY = "strongly-nonstationary"


def spread_stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, q3 = np.percentile(v, [25, 75])
    mean = float(v.mean())
    std = float(v.std())
    return {"mean": mean, "median": float(np.median(v)), "std": std,
            "iqr": float(q3 - q1), "cv": std / mean if mean > 0 else 0.0}


@dataclass
class NonStatReport:
    signal_variance_means: list
    length_scale_means: list
    config: dict
    redrawn_subsets: int = 0
    acceptance_rates: list = field(default_factory=list)

    @property
    def signal_variance_spread(self) -> dict:
        return spread_stats(self.signal_variance_means)

    @property
    def length_scale_spread(self) -> dict:
        return spread_stats(self.length_scale_means)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spread"] = {"signal_variance": self.signal_variance_spread,
                       "length_scale": self.length_scale_spread}
        d["classification"] = classify_spread(self)
        return d

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "signal_variance_mean", "length_scale_mean"])
            for i, (s, l) in enumerate(zip(self.signal_variance_means, self.length_scale_means)):
                w.writerow([i, repr(s), repr(l)])


def _local_template(dim: int) -> HyperVector:
    layout = hyper_layout(KernelSpec("matern32", dim))
    bounds = np.array([SIGMA_BOUNDS, LENGTH_BOUNDS])
    return HyperVector(np.array([0.3, 0.1]), layout, bounds)


def draw_subset(x: np.ndarray, size: int, rng, tree: Optional[cKDTree] = None) -> np.ndarray:
    """Indices of dataset points nearest to a random local Gaussian cloud.

    The cloud center is uniform on the unit cube and its standard deviation
    uniform on (0, 1]. Samples outside the cube are redrawn (a bounded
    number of times) and then clamped. Returned indices are unique.
    """
    dim = x.shape[1]
    center = rng.uniform(0.0, 1.0, dim)
    std = 1.0 - rng.uniform()  # (0, 1]
    pts = center + std * rng.standard_normal((size, dim))
    for _ in range(MAX_REDRAWS):
        bad = np.any((pts < 0) | (pts > 1), axis=1)
        if not bad.any():
            break
        pts[bad] = center + std * rng.standard_normal((int(bad.sum()), dim))
    pts = np.clip(pts, 0.0, 1.0)
    tree = tree if tree is not None else cKDTree(x)
    _, idx = tree.query(pts)
    return np.unique(idx)


def fit_local(x: np.ndarray, y: np.ndarray, mcmc_config: McmcConfig) -> tuple[float, float, float]:
    """MCMC fit of a stationary GP; returns mean signal variance, mean length scale, acceptance."""
    template = _local_template(x.shape[1])
    spec = KernelSpec("matern32", x.shape[1])
    space = SearchSpace(template)
    model = GpModel(x, y, spec, template, fixed_noise=SUBSET_NUGGET)

    def log_target(u):
        return log_marginal_likelihood(model.with_hypers(space.from_search(u)))

    sd = float(np.std(y))
    init = np.array([np.clip(sd if sd > 0 else 0.1, *SIGMA_BOUNDS), 0.1])
    chain = mcmc_sample(log_target, space.to_search(init), space.bounds, mcmc_config)
    hypers = 10.0 ** chain.samples
    return float(np.mean(hypers[:, 0] ** 2)), float(np.mean(hypers[:, 1])), chain.acceptance_rate


def measure_nonstationarity(
    dataset: Dataset,
    m_iterations: int = 100,
    subset_size: int = 20,
    mcmc_config: Optional[McmcConfig] = None,
    seed: Optional[int] = None,
) -> NonStatReport:
    """Distribution of local stationary-GP hyperparameters over random subsets.

    Each iteration draws a local subset (see :func:`draw_subset`), fits a
    Matern 3/2 GP with a fixed small nugget by MCMC, and records the
    posterior means of the signal variance ``sigma^2`` and length scale.
    Subsets that collapse onto a single dataset point are redrawn.
    """
    if subset_size < 5:
        raise ValueError("subset_size must be at least 5")
    if m_iterations < 1:
        raise ValueError("m_iterations must be at least 1")
    base = mcmc_config or McmcConfig(n_iterations=2000, burn_in=500, proposal_scale=0.15)
    tree = cKDTree(dataset.x)
    streams = np.random.SeedSequence(seed).spawn(m_iterations)
    sig, ell, acc = [], [], []
    redrawn = 0
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        idx = draw_subset(dataset.x, subset_size, rng, tree)
        while idx.size < 2:
            redrawn += 1
            idx = draw_subset(dataset.x, subset_size, rng, tree)
        cfg = McmcConfig(base.n_iterations, base.burn_in, base.proposal_scale,
                         seed=int(rng.integers(2**63)))
        s, l, a = fit_local(dataset.x[idx], dataset.y[idx], cfg)
        sig.append(s)
        ell.append(l)
        acc.append(a)
    config = {"m_iterations": m_iterations, "subset_size": subset_size, "seed": seed,
              "mcmc": {"n_iterations": base.n_iterations, "burn_in": base.burn_in,
                       "proposal_scale": np.asarray(base.proposal_scale).tolist()},
              "sigma_bounds": list(SIGMA_BOUNDS), "length_bounds": list(LENGTH_BOUNDS),
              "nugget": SUBSET_NUGGET}
    return NonStatReport(sig, ell, config, redrawn, acc)


def classify_spread(report: NonStatReport, weak_cv: float = WEAK_CV, strong_cv: float = STRONG_CV) -> str:
    """Coarse label from the larger coefficient of variation of the two lists."""
    if not report.signal_variance_means:
        raise ValueError("empty report")
    cv = max(report.signal_variance_spread["cv"], report.length_scale_spread["cv"])
    if cv < weak_cv:
        return LIKELY_STATIONARY
    if cv < strong_cv:
        return WEAKLY_NONSTATIONARY
    return STRONGLY_NONSTATIONARY
