"""Exact Gaussian-process regression with a constant prior mean."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .kernels import HyperVector, KernelError, KernelSpec, kernel_matrix

JITTER_START = 1e-10
JITTER_MAX = 1e-4
LOG_2PI = np.log(2.0 * np.pi)


class NonPSDError(np.linalg.LinAlgError):
    """Cholesky factorization failed even with the largest allowed jitter."""

    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


def build_covariance(x1, x2, kernel: KernelSpec, hypers: HyperVector) -> np.ndarray:
    """Kernel matrix between two point sets (``A x n`` and ``B x n``)."""
    return kernel_matrix(x1, x2, kernel, hypers)


def noise_variance(kernel: KernelSpec, hypers: HyperVector, fixed: float) -> float:
    """Diagonal noise level: the trained nugget if the kernel has one."""
    if kernel.nugget:
        return hypers.scalar("noise_variance")
    return fixed


def cholesky_with_jitter(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``a``, adding diagonal jitter only on failure.

    Jitter starts at ``1e-10 * mean(diag)`` and grows tenfold up to
    ``1e-4 * mean(diag)``. Returns the factor and the jitter applied.
    """
    if not np.all(np.isfinite(a)):
        raise NonPSDError("non-PSD covariance: matrix has non-finite entries", 0.0)
    scale = float(np.mean(np.diag(a))) if a.size else 1.0
    if not scale > 0:
        scale = 1.0
    jitter = 0.0
    rel = JITTER_START
    while True:
        try:
            mat = a if jitter == 0.0 else a + jitter * np.eye(a.shape[0])
            return linalg.cholesky(mat, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            if rel > JITTER_MAX * (1 + 1e-9):
                raise NonPSDError(
                    f"non-PSD covariance: Cholesky failed with jitter {jitter:.3g}", jitter
                ) from None
            jitter = rel * scale
            rel *= 10.0


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    mean: np.ndarray
    variance: np.ndarray

    def __len__(self):
        return self.mean.size


@dataclass(eq=False)
class GpModel:
    """Training data, kernel and hyperparameters of an exact GP.

    ``fixed_noise`` is the observation-noise variance used when the kernel
    does not train a nugget; it is added to the covariance diagonal.
    The Cholesky factor of ``K + V`` is computed lazily and cached.
    """

    x_data: np.ndarray
    y_data: np.ndarray
    kernel: KernelSpec
    hypers: HyperVector
    prior_mean: Optional[float] = None
    fixed_noise: float = 0.0
    chol: Optional[np.ndarray] = field(default=None, repr=False)
    jitter: float = 0.0

    def __post_init__(self):
        self.x_data = np.atleast_2d(np.asarray(self.x_data, dtype=float))
        if self.x_data.shape[0] == 1 and self.kernel.dim == 1 and self.x_data.shape[1] != 1:
            self.x_data = self.x_data.T
        self.y_data = np.asarray(self.y_data, dtype=float).ravel()
        if self.x_data.shape[0] < 1 or self.x_data.shape[0] != self.y_data.size:
            raise KernelError("x_data and y_data must have the same, non-zero number of rows")
        if self.x_data.shape[1] != self.kernel.dim:
            raise KernelError(
                f"x_data has dimension {self.x_data.shape[1]}, kernel expects {self.kernel.dim}"
            )
        if self.prior_mean is None:
            self.prior_mean = float(np.mean(self.y_data))

    @property
    def n_data(self) -> int:
        return self.y_data.size

    @property
    def noise(self) -> float:
        return noise_variance(self.kernel, self.hypers, self.fixed_noise)

    def with_hypers(self, hypers: HyperVector) -> "GpModel":
        return GpModel(self.x_data, self.y_data, self.kernel, hypers,
                       prior_mean=self.prior_mean, fixed_noise=self.fixed_noise)

    def covariance(self) -> np.ndarray:
        k = build_covariance(self.x_data, self.x_data, self.kernel, self.hypers)
        k[np.diag_indices_from(k)] += self.noise
        return k

    def factor(self) -> np.ndarray:
        if self.chol is None:
            self.chol, self.jitter = cholesky_with_jitter(self.covariance())
        return self.chol

    def fit(self) -> "GpModel":
        self.factor()
        return self


def log_marginal_likelihood(model: GpModel) -> float:
    """``-1/2 r^T (K+V)^-1 r - 1/2 ln|K+V| - N/2 ln(2 pi)`` with ``r = y - m``."""
    chol = model.factor()
    r = model.y_data - model.prior_mean
    alpha = linalg.solve_triangular(chol, r, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * alpha @ alpha - 0.5 * logdet - 0.5 * model.n_data * LOG_2PI)


def posterior(model: GpModel, x_query) -> PosteriorSummary:
    """Posterior mean and (clamped) variance of the latent function."""
    x_query = np.asarray(x_query, dtype=float)
    if x_query.size == 0:
        return PosteriorSummary(np.empty(0), np.empty(0))
    x_query = x_query.reshape(-1, model.kernel.dim) if x_query.ndim < 2 else x_query
    chol = model.factor()
    kappa = build_covariance(model.x_data, x_query, model.kernel, model.hypers)
    r = model.y_data - model.prior_mean
    alpha = linalg.cho_solve((chol, True), r, check_finite=False)
    mean = model.prior_mean + kappa.T @ alpha

    v = linalg.solve_triangular(chol, kappa, lower=True, check_finite=False)
    prior_var = _prior_diag(x_query, model)
    var = prior_var - np.einsum("ij,ij->j", v, v)
    if np.any(var < -1e-6):
        warnings.warn(
            f"posterior variance down to {var.min():.3g} before clamping; "
            "covariance may be ill-conditioned",
            RuntimeWarning,
            stacklevel=2,
        )
    return PosteriorSummary(mean, np.maximum(var, 0.0))


def _prior_diag(x: np.ndarray, model: GpModel, chunk: int = 256) -> np.ndarray:
    # blockwise so a dense prediction grid never needs its full Q x Q matrix
    out = np.empty(x.shape[0])
    for s in range(0, x.shape[0], chunk):
        blk = x[s:s + chunk]
        out[s:s + chunk] = np.diag(build_covariance(blk, blk, model.kernel, model.hypers))
    return out
