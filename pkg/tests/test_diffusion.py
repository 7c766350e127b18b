import math

import numpy as np
import pytest
from scipy import stats

from strongsel.core import MutationModel, SelectionRegime
from strongsel.diffusion import (
    CbiState,
    RichardsonCheckError,
    cbi_simulate,
    cir_mean,
    cir_transition_sample,
    cir_variance,
    gaussian_moments_solve,
    logistic_trajectory,
    logistic_velocity,
    scaled_fluctuation_compare,
    simplex_ok,
    wf_diffusion_matrix,
    wf_drift,
    wf_ensemble,
    wf_simulate,
)


def test_vertex_is_absorbing_without_forces():
    m = MutationModel(0.0, [[0.5, 0.5], [0.5, 0.5]])
    path = wf_simulate(m, SelectionRegime(1e-9, (0.0,)), [0.0, 1.0], 1.0, 0.01, seed=1)
    assert np.all(path.states == [0.0, 1.0])
    assert path.times[-1] == pytest.approx(1.0)


def test_paths_stay_on_simplex(general3):
    path = wf_simulate(general3, SelectionRegime(20.0), [0.2, 0.3, 0.5], 2.0, 1e-3, seed=7)
    assert simplex_ok(path.states)


def test_stability_guard(general3):
    with pytest.raises(ValueError, match="stability"):
        wf_simulate(general3, SelectionRegime(100.0), [0.2, 0.3, 0.5], 1.0, 0.01, seed=1)


def test_single_step_increment_moments():
    m = MutationModel(1.0, [[0.6, 0.4], [0.3, 0.7]])
    sigmas = np.array([4.0, 0.0])
    x0 = np.array([0.4, 0.6])
    dt, reps = 1e-4, 100_000
    x = np.tile(x0, (reps, 1))
    wf_ensemble(m, sigmas, x, dt, 1, np.random.default_rng(5))
    inc = (x[:, 1] - x0[1]) / dt
    mean, se = inc.mean(), inc.std(ddof=1) / math.sqrt(reps)
    assert abs(mean - wf_drift(x0, m, sigmas)[1]) <= 3 * se
    sq = (x[:, 1] - x0[1]) ** 2 / dt
    assert abs(sq.mean() - wf_diffusion_matrix(x0)[1, 1]) <= 3 * sq.std(ddof=1) / math.sqrt(reps)


def test_logistic_trajectory_examples():
    xi = np.array([0.0, 0.4, 0.6])
    assert np.array_equal(logistic_trajectory(xi, 5.0), xi)
    assert np.array_equal(logistic_trajectory([1.0, 0.0, 0.0], 3.0), [1.0, 0.0, 0.0])
    assert logistic_trajectory([0.3, 0.7], 80.0)[0] == pytest.approx(1.0, abs=1e-12)
    xi = np.array([0.3, 0.5, 0.2])
    h = 1e-6
    fd = (logistic_trajectory(xi, h) - logistic_trajectory(xi, 0.0)) / h
    np.testing.assert_allclose(fd, logistic_velocity(xi), atol=1e-6)


def test_gaussian_moments_degenerate_at_fit_vertex():
    mean0 = np.array([-0.3, 0.2, 0.1])
    v = np.array([-1.0, 0.5, 0.5])
    cov0 = np.outer(v, v)
    out = gaussian_moments_solve([1.0, 0.0, 0.0], mean0, cov0, 4.0, 0.01)
    for mom in out[::50]:
        np.testing.assert_allclose(mom.mean, math.exp(-0.5 * mom.t) * mean0, atol=1e-10)
        np.testing.assert_allclose(mom.cov, math.exp(-mom.t) * cov0, atol=1e-10)


def test_gaussian_moments_psd_and_stationary():
    out = gaussian_moments_solve([0.4, 0.35, 0.25], np.zeros(3), np.zeros((3, 3)), 60.0, 0.01)
    for mom in out[::200]:
        assert np.linalg.eigvalsh(mom.cov).min() >= -1e-12
    assert np.max(np.abs(out[-1].mean)) < 1e-9
    assert np.max(np.abs(out[-1].cov)) < 1e-9


def test_gaussian_moments_reports_coarse_step():
    with pytest.raises(RichardsonCheckError):
        gaussian_moments_solve([0.1, 0.9], [0.0, 0.0], np.zeros((2, 2)), 10.0, 2.0)


def test_cir_absorbed_at_zero():
    assert np.all(cir_transition_sample(0.0, 0.0, 1.5, seed=2, size=1000) == 0.0)


def test_cir_conditional_mean_and_positivity():
    z, a, t = 1.3, 1.2, 0.8
    draws = cir_transition_sample(z, a, t, seed=3, size=1_000_000)
    se = draws.std(ddof=1) / 1000.0
    assert abs(draws.mean() - cir_mean(z, a, t)) <= 4 * se
    assert draws.var() == pytest.approx(cir_variance(z, a, t), rel=0.01)
    assert np.all(draws > 0)


def test_cir_stationary_law_is_gamma():
    a = 0.8
    draws = cir_transition_sample(2.0, a, 60.0, seed=4, size=20_000)
    assert stats.kstest(draws, stats.gamma(a).cdf).pvalue > 0.01


def test_cbi_zero_state_without_immigration():
    m = MutationModel(0.0, [[0.5, 0.5], [0.5, 0.5]])
    out = cbi_simulate(m, CbiState.from_unfit([0.0]), [0.5, 1.0], seed=1)
    assert all(np.all(s.z == 0.0) for s in out)
    assert [s.time for s in out] == [0.5, 1.0]


def test_cbi_components_independent(general3):
    reps = 20_000
    states = [cbi_simulate(general3, CbiState.from_unfit([0.5, 1.0]), [1.0], seed=s)[0] for s in range(reps)]
    z = np.array([s.z for s in states])
    assert np.allclose(z[:, 0], -z[:, 1:].sum(axis=1))
    prod = (z[:, 1] - z[:, 1].mean()) * (z[:, 2] - z[:, 2].mean())
    assert abs(prod.mean()) <= 4 * prod.std(ddof=1) / math.sqrt(reps)


def test_cbi_rejects_backward_times(general3):
    with pytest.raises(ValueError):
        cbi_simulate(general3, CbiState.from_unfit([0.5, 1.0], time=2.0), [1.0], seed=1)


def test_infinite_sigma_self_check_is_exact():
    m = MutationModel(1.0, [[0.0, 1.0], [0.5, 0.5]])
    report = scaled_fluctuation_compare(m, math.inf, 2.0, 500, seed=9)
    for row in report["cbi"]:
        if row.name.endswith("vs cbi sample"):
            assert row.observed == row.expected


def test_gaussian_branch_short_time():
    m = MutationModel(1.0, [[0.6, 0.4], [0.3, 0.7]])
    report = scaled_fluctuation_compare(m, 200.0, 0.5, 4000, seed=13, dt_scaled=0.01, xi0=[0.5, 0.5])
    for row in report["gaussian"]:
        assert row.within(3.0), row
