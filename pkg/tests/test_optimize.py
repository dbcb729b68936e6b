import numpy as np
import pytest

from nsgp.data import synth_1d
from nsgp.gp import GpModel, log_marginal_likelihood
from nsgp.kernels import default_hypers, preset_kernel
from nsgp.optimize import (
    DEConfig, FitConfig, McmcConfig, SearchSpace, TraceRecord, acceptance_probability,
    differential_evolution, fit_with_trace, mcmc_sample, read_trace_csv, reflect,
    write_trace_csv,
)


def test_de_sphere():
    res = differential_evolution(lambda x: -np.sum(x**2), [(-5, 5), (-5, 5)],
                                 DEConfig(seed=1, max_generations=200))
    assert res.generations <= 200
    assert np.linalg.norm(res.x) < 1e-3


def test_de_quadratic_1d():
    res = differential_evolution(lambda x: -(x[0] - 0.3) ** 2, [(0, 1)], DEConfig(seed=2))
    assert abs(res.x[0] - 0.3) < 1e-4


def test_de_constant_objective_runs_to_cap():
    res = differential_evolution(lambda x: 1.0, [(0, 1), (2, 3)], DEConfig(seed=0, max_generations=25))
    assert res.generations == 25
    assert 0 <= res.x[0] <= 1 and 2 <= res.x[1] <= 3


def test_de_history_monotone_and_reproducible():
    f = lambda x: -np.sum((x - 0.2) ** 2) + np.cos(5 * x).sum()
    a = differential_evolution(f, [(-2, 2)] * 3, DEConfig(seed=5, max_generations=40))
    b = differential_evolution(f, [(-2, 2)] * 3, DEConfig(seed=5, max_generations=40))
    assert np.all(np.diff(a.history) >= 0)
    assert np.array_equal(a.x, b.x) and a.history == b.history


def test_de_non_finite_objective_is_rejected():
    def f(x):
        if x[0] < 0:
            return np.nan
        if x[0] > 0.9:
            raise np.linalg.LinAlgError("boom")
        return -(x[0] - 0.5) ** 2
    res = differential_evolution(f, [(-1, 1)], DEConfig(seed=3, max_generations=60))
    assert abs(res.x[0] - 0.5) < 1e-3
    assert np.isfinite(res.value)


def test_de_keeps_x0():
    res = differential_evolution(lambda x: -abs(x[0] - 0.123456), [(0, 1)],
                                 DEConfig(seed=0, max_generations=0), x0=[0.123456])
    assert res.x[0] == pytest.approx(0.123456)


def test_de_callback_sees_every_generation_and_can_stop():
    seen = []
    differential_evolution(lambda x: -x[0] ** 2, [(-1, 1)], DEConfig(seed=0, max_generations=10),
                           callback=lambda g, x, v: seen.append(g) or g == 4)
    assert seen == [0, 1, 2, 3, 4]


def test_de_rejects_bad_setup():
    with pytest.raises(ValueError):
        differential_evolution(lambda x: 0.0, [(0, np.inf)])
    with pytest.raises(ValueError):
        differential_evolution(lambda x: 0.0, [(0, 1)], DEConfig(popsize=3))


def test_mcmc_standard_normal():
    res = mcmc_sample(lambda x: -0.5 * x[0] ** 2, [0.0], [(-10, 10)],
                      McmcConfig(50_000, 5_000, 2.4, seed=0))
    assert abs(res.samples.mean()) < 0.05
    assert abs(res.samples.var() - 1.0) < 0.1
    assert 0.2 < res.acceptance_rate < 0.7


def test_mcmc_bimodal_symmetric():
    def log_p(x):
        return np.logaddexp(-0.5 * ((x[0] - 1) / 0.4) ** 2, -0.5 * ((x[0] + 1) / 0.4) ** 2)
    res = mcmc_sample(log_p, [1.0], [(-5, 5)], McmcConfig(60_000, 5_000, 1.5, seed=4))
    assert abs(res.samples.mean()) < 0.1


def test_mcmc_tiny_proposals_always_accept():
    res = mcmc_sample(lambda x: -0.5 * x @ x, [0.3, -0.2], [(-5, 5)] * 2,
                      McmcConfig(2_000, 100, 1e-9, seed=0))
    assert res.acceptance_rate > 0.99
    assert np.max(np.abs(res.samples - [0.3, -0.2])) < 1e-6


def test_acceptance_rule_hand_values():
    # two-state target with masses 1/4 and 3/4
    lo, hi = np.log(0.25), np.log(0.75)
    assert acceptance_probability(lo, hi) == 1.0
    assert acceptance_probability(hi, lo) == pytest.approx(1 / 3, rel=1e-14)
    assert acceptance_probability(hi, -np.inf) == 0.0


def test_mcmc_two_state_occupancy():
    # piecewise-constant density on [0, 2]: mass 1/4 on [0, 1), 3/4 on [1, 2]
    log_p = lambda x: np.log(0.75) if x[0] >= 1 else np.log(0.25)
    res = mcmc_sample(log_p, [0.5], [(0, 2)], McmcConfig(60_000, 1_000, 0.7, seed=2))
    assert np.mean(res.samples[:, 0] >= 1) == pytest.approx(0.75, abs=0.02)


def test_mcmc_zero_acceptance_warns():
    res = mcmc_sample(lambda x: 0.0 if x[0] == 0.5 else -np.inf, [0.5], [(0, 1)],
                      McmcConfig(200, 50, 0.1, seed=0))
    assert res.acceptance_rate == 0.0
    assert res.warning is not None


def test_mcmc_callback_and_bounds():
    states = []
    res = mcmc_sample(lambda x: 0.0, [0.5, 0.5], [(0, 1), (0, 1)], McmcConfig(500, 100, 0.8, seed=0),
                      on_sample=lambda i, s, v: states.append(s.copy()))
    assert len(states) == 500 and res.samples.shape == (400, 2)
    assert np.all((res.samples >= 0) & (res.samples <= 1))


def test_mcmc_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(100, 100)
    with pytest.raises(ValueError):
        McmcConfig(100, 10, 0.0)


def test_reflect():
    lo, hi = np.array([0.0]), np.array([1.0])
    np.testing.assert_allclose(reflect(np.array([1.25]), lo, hi), [0.75])
    np.testing.assert_allclose(reflect(np.array([-0.25]), lo, hi), [0.25])
    np.testing.assert_allclose(reflect(np.array([2.5]), lo, hi), [0.5])


def test_search_space_roundtrip():
    h = default_hypers(preset_kernel("parametric", 1))
    space = SearchSpace(h)
    back = space.from_search(space.to_search(h.values))
    np.testing.assert_allclose(back.values, h.values, rtol=1e-13)
    assert np.all(space.bounds[h.positive_mask] == [-3.0, 2.0])


@pytest.fixture(scope="module")
def synth():
    ds = synth_1d(30, 0.001, seed=4)
    return ds, *ds.latent_grid(200)


def _model(ds, name="stationary"):
    spec = preset_kernel(name, 1)
    return GpModel(ds.x, ds.y, spec, default_hypers(spec), fixed_noise=ds.noise_variance)


def test_fit_de_trace(synth):
    ds, xg, yg = synth
    cfg = FitConfig(de=DEConfig(seed=0, max_generations=40))
    res = fit_with_trace(_model(ds), xg, yg, cfg)
    walls = [t.wall_seconds for t in res.trace]
    assert len(res.trace) >= 2
    assert np.all(np.diff(walls) >= 0)
    assert all(t.crps <= 1e-12 and t.rmse >= 0 for t in res.trace)
    lls = [t.log_likelihood for t in res.trace]
    assert np.all(np.diff(lls) >= -1e-9)
    assert res.log_likelihood >= lls[0] - 1e-9
    assert res.log_likelihood == pytest.approx(log_marginal_likelihood(res.model))
    assert res.model.chol is not None


def test_fit_de_reproducible(synth):
    ds, xg, yg = synth
    cfg = lambda: FitConfig(de=DEConfig(seed=3, max_generations=15))
    a = fit_with_trace(_model(ds), xg, yg, cfg())
    b = fit_with_trace(_model(ds), xg, yg, cfg())
    assert [(t.rmse, t.crps, t.log_likelihood) for t in a.trace] == \
        [(t.rmse, t.crps, t.log_likelihood) for t in b.trace]
    assert np.array_equal(a.model.hypers.values, b.model.hypers.values)


def test_fit_mcmc_uses_sample_mean(synth):
    ds, xg, yg = synth
    cfg = FitConfig(method="mcmc", mcmc=McmcConfig(600, 200, 0.1, seed=1), trace_every=50)
    res = fit_with_trace(_model(ds), xg, yg, cfg)
    assert len(res.trace) == 12
    space = SearchSpace(res.model.hypers)
    expected = np.mean([space.from_search(u).values for u in res.mcmc.samples], axis=0)
    np.testing.assert_allclose(res.model.hypers.values, expected, rtol=1e-12)
    assert res.model.hypers.in_bounds()


def test_fit_unknown_method(synth):
    ds, xg, yg = synth
    with pytest.raises(ValueError):
        fit_with_trace(_model(ds), xg, yg, FitConfig(method="adam"))


def test_fit_survives_non_psd_regions(synth):
    ds, xg, yg = synth
    # duplicated inputs with zero noise make much of the box singular
    x = np.vstack([ds.x, ds.x])
    y = np.concatenate([ds.y, ds.y + 0.01])
    spec = preset_kernel("stationary", 1)
    model = GpModel(x, y, spec, default_hypers(spec), fixed_noise=0.0)
    res = fit_with_trace(model, xg, yg, FitConfig(de=DEConfig(seed=0, max_generations=5)))
    assert np.isfinite(res.log_likelihood)


def test_trace_csv_roundtrip(tmp_path):
    trace = [TraceRecord(0.0, 0.1, -0.05, 10.0), TraceRecord(0.5, 0.09, -0.04, 12.5)]
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace)
    assert path.read_text().splitlines()[0] == "wall_seconds,rmse,crps,log_likelihood"
    assert read_trace_csv(path) == trace
