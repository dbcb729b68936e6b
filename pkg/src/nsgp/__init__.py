"""Gaussian-process regression with stationary and non-stationary kernels.

Kernels, exact GP inference, derivative-free training (differential
evolution and Metropolis-Hastings), CRPS/RMSE scoring, a local-fit
non-stationarity diagnostic and a batch CLI (``nsgp``).
"""
from .data import Dataset, latent_1d, load_csv, synth_1d, synth_signal, train_test_split
from .gp import GpModel, NonPSDError, PosteriorSummary, build_covariance, log_marginal_likelihood, posterior
from .kernels import HyperVector, KernelSpec, default_hypers, hyper_count, hyper_layout, preset_kernel
from .metrics import ScoreReport, crps_gaussian, rmse, score_set
from .optimize import (
    DEConfig, FitConfig, McmcConfig, TraceRecord, differential_evolution, fit_with_trace, mcmc_sample,
)
from .stationarity import NonStatReport, classify_spread, measure_nonstationarity
from .warpnet import WarpNet

__version__ = "0.1.0"

__all__ = [
    "Dataset", "latent_1d", "load_csv", "synth_1d", "synth_signal", "train_test_split",
    "GpModel", "NonPSDError", "PosteriorSummary", "build_covariance", "log_marginal_likelihood",
    "posterior", "HyperVector", "KernelSpec", "default_hypers", "hyper_count", "hyper_layout",
    "preset_kernel", "ScoreReport", "crps_gaussian", "rmse", "score_set", "DEConfig", "FitConfig",
    "McmcConfig", "TraceRecord", "differential_evolution", "fit_with_trace", "mcmc_sample",
    "NonStatReport", "classify_spread", "measure_nonstationarity", "WarpNet",
]
