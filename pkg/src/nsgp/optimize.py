"""Derivative-free hyperparameter training.

Two drivers are provided: a DE/rand/1/bin differential-evolution maximizer
and a random-walk Metropolis-Hastings sampler. :func:`fit_with_trace` ties
either one to a :class:`~nsgp.gp.GpModel` and records RMSE, CRPS and log
marginal likelihood on a held-out set while training runs.

Both drivers search in a transformed space where every strictly positive
hyperparameter (scales, widths, nugget) is represented by its base-10
logarithm; coefficients and network parameters stay linear.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .gp import GpModel, log_marginal_likelihood, posterior
from .kernels import HyperVector, KernelError
from .metrics import crps_mean, rmse

log = logging.getLogger(__name__)

TRACE_HEADER = ("wall_seconds", "rmse", "crps", "log_likelihood")


# --------------------------------------------------------------------------
# differential evolution

@dataclass
class DEConfig:
    popsize: Optional[int] = None  # default 15 * dim, capped at 200
    mutation: float = 0.7
    crossover: float = 0.9
    max_generations: int = 300
    tol: float = 1e-8
    seed: Optional[int] = None
    # fraction of the initial population drawn near x0 instead of uniformly
    x0_fraction: float = 0.0
    x0_spread: float = 0.05

    def population_size(self, dim: int) -> int:
        size = self.popsize if self.popsize is not None else min(15 * dim, 200)
        if size < 4:
            raise ValueError("differential evolution needs a population of at least 4")
        return size


@dataclass
class DEResult:
    x: np.ndarray
    value: float
    generations: int
    n_evals: int
    history: list = field(default_factory=list)  # best value after each generation


def _fitness(objective, x) -> float:
    try:
        v = float(objective(x))
    except (np.linalg.LinAlgError, KernelError, FloatingPointError, ValueError):
        return -np.inf
    return v if np.isfinite(v) else -np.inf


def _latin_hypercube(rng, n, dim) -> np.ndarray:
    strata = (np.arange(n)[:, None] + rng.uniform(size=(n, dim))) / n
    for j in range(dim):
        strata[:, j] = strata[rng.permutation(n), j]
    return strata


def differential_evolution(
    objective: Callable[[np.ndarray], float],
    bounds,
    config: Optional[DEConfig] = None,
    x0=None,
    callback: Optional[Callable[[int, np.ndarray, float], Optional[bool]]] = None,
) -> DEResult:
    """Maximize ``objective`` over a box with DE/rand/1/bin.

    Candidates leaving the box are clipped back onto it. Non-finite or
    raising objective evaluations count as ``-inf`` fitness. ``x0``, if
    given, replaces the first member of the initial population.
    ``callback(generation, best_x, best_value)`` runs after the initial
    population (generation 0) and after every generation; returning True
    stops the search.
    """
    config = config or DEConfig()
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 1] < bounds[:, 0]):
        raise ValueError("differential evolution needs finite bounds with low <= high")
    lo, width = bounds[:, 0], bounds[:, 1] - bounds[:, 0]
    dim = bounds.shape[0]
    npop = config.population_size(dim)
    rng = np.random.default_rng(config.seed)

    pop = _latin_hypercube(rng, npop, dim)
    if x0 is not None:
        safe = np.where(width > 0, width, 1.0)
        u0 = np.clip((np.asarray(x0, dtype=float) - lo) / safe, 0.0, 1.0)
        n_near = int(round(config.x0_fraction * (npop - 1)))
        pop[1:1 + n_near] = np.clip(
            u0 + config.x0_spread * rng.standard_normal((n_near, dim)), 0.0, 1.0)
        pop[0] = u0
    fit = np.array([_fitness(objective, lo + p * width) for p in pop])
    n_evals = npop
    best = int(np.argmax(fit))
    history = [fit[best]]
    if callback is not None and callback(0, lo + pop[best] * width, fit[best]):
        return DEResult(lo + pop[best] * width, float(fit[best]), 0, n_evals, history)

    gen = 0
    for gen in range(1, config.max_generations + 1):
        trials = np.empty_like(pop)
        for i in range(npop):
            choices = rng.choice(npop - 1, 3, replace=False)
            a, b, c = np.where(choices >= i, choices + 1, choices)
            mutant = pop[a] + config.mutation * (pop[b] - pop[c])
            cross = rng.uniform(size=dim) < config.crossover
            cross[rng.integers(dim)] = True
            trials[i] = np.clip(np.where(cross, mutant, pop[i]), 0.0, 1.0)
        trial_fit = np.array([_fitness(objective, lo + t * width) for t in trials])
        n_evals += npop
        better = trial_fit >= fit
        pop[better] = trials[better]
        fit[better] = trial_fit[better]
        best = int(np.argmax(fit))
        history.append(fit[best])
        if callback is not None and callback(gen, lo + pop[best] * width, fit[best]):
            break
        if np.all(np.ptp(pop, axis=0) < config.tol):
            break
    return DEResult(lo + pop[best] * width, float(fit[best]), gen, n_evals, history)


# --------------------------------------------------------------------------
# Metropolis-Hastings

@dataclass
class McmcConfig:
    n_iterations: int = 10_000
    burn_in: int = 2_000
    proposal_scale: float | Sequence[float] = 0.05
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn_in must be smaller than n_iterations")
        if np.any(np.asarray(self.proposal_scale, dtype=float) <= 0):
            raise ValueError("proposal_scale must be positive")


@dataclass
class McmcResult:
    samples: np.ndarray  # post burn-in states, one row per iteration
    log_targets: np.ndarray
    acceptance_rate: float
    warning: Optional[str] = None

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)


def acceptance_probability(log_current: float, log_proposed: float) -> float:
    """Metropolis rule for symmetric proposals: ``min(1, exp(delta))``."""
    if log_proposed == -np.inf:
        return 0.0
    if log_current == -np.inf:
        return 1.0
    return float(min(1.0, np.exp(min(0.0, log_proposed - log_current))))


def reflect(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fold points back into ``[lo, hi]`` by mirroring at the walls."""
    width = hi - lo
    safe = np.where(width > 0, width, 1.0)
    t = np.mod(x - lo, 2.0 * safe)
    t = np.where(t > safe, 2.0 * safe - t, t)
    return np.where(width > 0, lo + t, lo)


def mcmc_sample(
    log_target: Callable[[np.ndarray], float],
    init,
    bounds,
    config: Optional[McmcConfig] = None,
    on_sample: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> McmcResult:
    """Random-walk Metropolis-Hastings with a diagonal Gaussian proposal.

    Proposals are reflected at the box walls, which keeps them symmetric.
    ``on_sample(iteration, state, log_target)`` sees the chain state after
    every iteration, burn-in included.
    """
    config = config or McmcConfig()
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = np.random.default_rng(config.seed)
    scale = np.broadcast_to(np.asarray(config.proposal_scale, dtype=float), lo.shape)

    state = reflect(np.asarray(init, dtype=float).copy(), lo, hi)
    current = _fitness(log_target, state)
    if not np.isfinite(current):
        raise ValueError("log target is not finite at the initial state")

    n_keep = config.n_iterations - config.burn_in
    samples = np.empty((n_keep, lo.size))
    values = np.empty(n_keep)
    accepted = 0
    for it in range(config.n_iterations):
        proposal = reflect(state + scale * rng.standard_normal(lo.size), lo, hi)
        proposed = _fitness(log_target, proposal)
        if np.log(rng.uniform()) < proposed - current:
            state, current = proposal, proposed
            accepted += 1
        if it >= config.burn_in:
            samples[it - config.burn_in] = state
            values[it - config.burn_in] = current
        if on_sample is not None:
            on_sample(it, state, current)

    warning = None
    if accepted == 0:
        warning = f"no proposal accepted in {config.n_iterations} iterations"
        log.warning(warning)
    return McmcResult(samples, values, accepted / config.n_iterations, warning)


# --------------------------------------------------------------------------
# search-space transform

@dataclass(frozen=True)
class SearchSpace:
    """Maps a hyper vector to optimizer coordinates and back.

    Positive entries are searched as ``log10``; everything else is linear.
    """

    template: HyperVector

    @property
    def mask(self) -> np.ndarray:
        return self.template.positive_mask

    @property
    def bounds(self) -> np.ndarray:
        b = self.template.bounds.copy()
        b[self.mask] = np.log10(b[self.mask])
        return b

    def to_search(self, values) -> np.ndarray:
        u = np.asarray(values, dtype=float).copy()
        u[self.mask] = np.log10(u[self.mask])
        return u

    def from_search(self, u) -> HyperVector:
        v = np.asarray(u, dtype=float).copy()
        v[self.mask] = 10.0 ** v[self.mask]
        v = np.clip(v, self.template.bounds[:, 0], self.template.bounds[:, 1])
        return self.template.with_values(v)


# --------------------------------------------------------------------------
# traced fitting

@dataclass
class TraceRecord:
    wall_seconds: float
    rmse: float
    crps: float
    log_likelihood: float


@dataclass
class FitConfig:
    method: str = "de"
    de: DEConfig = field(default_factory=DEConfig)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    trace_every: int = 50  # MCMC iterations between trace records
    x0: Optional[np.ndarray] = None  # warm start, in hyperparameter units


@dataclass
class FitResult:
    model: GpModel
    trace: list
    log_likelihood: float
    wall_seconds: float
    mcmc: Optional[McmcResult] = None


def _evaluate(model: GpModel, test_x, test_y) -> tuple[float, float, float]:
    lml = log_marginal_likelihood(model)
    post = posterior(model, test_x)
    return rmse(test_y, post.mean), crps_mean(test_y, post.mean, post.variance), lml


def fit_with_trace(model: GpModel, test_x, test_y, config: Optional[FitConfig] = None) -> FitResult:
    """Train ``model``'s hyperparameters and trace test-set scores over time.

    With ``method="de"`` the final hyperparameters are the best found and one
    trace record is written per generation. With ``method="mcmc"`` they are
    the mean of the post-burn-in samples, and a record is written every
    ``trace_every`` iterations. Evaluations whose covariance cannot be
    factored are skipped (``-inf`` objective).
    """
    config = config or FitConfig()
    space = SearchSpace(model.hypers)
    test_x = np.asarray(test_x, dtype=float)
    test_y = np.asarray(test_y, dtype=float).ravel()
    trace: list[TraceRecord] = []
    start = time.perf_counter()

    def objective(u):
        return log_marginal_likelihood(model.with_hypers(space.from_search(u)))

    def record(u):
        try:
            r, c, l = _evaluate(model.with_hypers(space.from_search(u)), test_x, test_y)
        except (np.linalg.LinAlgError, KernelError):
            return
        trace.append(TraceRecord(time.perf_counter() - start, r, c, l))

    x0 = model.hypers.values if config.x0 is None else np.asarray(config.x0, dtype=float)
    u0 = space.to_search(np.clip(x0, model.hypers.bounds[:, 0], model.hypers.bounds[:, 1]))

    if config.method == "de":
        result = differential_evolution(
            objective, space.bounds, config.de, x0=u0,
            callback=lambda gen, u, val: record(u),
        )
        best = space.from_search(result.x)
        chain = None
    elif config.method == "mcmc":
        every = max(1, config.trace_every)

        def on_sample(it, u, val):
            if it % every == 0:
                record(u)

        chain = mcmc_sample(objective, u0, space.bounds, config.mcmc, on_sample=on_sample)
        hyper_samples = np.array([space.from_search(u).values for u in chain.samples])
        best = model.hypers.with_values(hyper_samples.mean(axis=0))
    else:
        raise ValueError(f"unknown training method {config.method!r}")

    fitted = model.with_hypers(best).fit()
    return FitResult(fitted, trace, log_marginal_likelihood(fitted),
                     time.perf_counter() - start, chain)


def write_trace_csv(path, trace: Sequence[TraceRecord]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t in trace:
            w.writerow([repr(t.wall_seconds), repr(t.rmse), repr(t.crps), repr(t.log_likelihood)])


def read_trace_csv(path) -> list[TraceRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {reader.fieldnames}")
        return [TraceRecord(*(float(row[k]) for k in TRACE_HEADER)) for row in reader]
