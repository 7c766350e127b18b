import math

import numpy as np
import pytest

from strongsel.core import MutationModel, PimModel
from strongsel.diffusion import cir_mean
from strongsel.discrete_wf import (
    DiscreteWfParams,
    anomalous_scaling_signature,
    boundary_fluctuation_experiment,
    drift_limit,
    increment_limit_convergence,
    increment_moments,
    interior_fluctuation_experiment,
    offspring_law,
    scaling_params,
    wf_step,
)

CBI_MODEL = MutationModel(1.0, [[0.0, 1.0], [0.5, 0.5]])


def test_vertex_without_forces():
    p = DiscreteWfParams(50, np.eye(3), np.zeros(3))
    assert np.array_equal(wf_step(np.array([0.0, 1.0, 0.0]), p, np.random.default_rng(1)), [0.0, 1.0, 0.0])


def test_params_validation():
    with pytest.raises(ValueError):
        DiscreteWfParams(0, np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        DiscreteWfParams(10, [[0.5, 0.6], [0.5, 0.5]], np.zeros(2))
    with pytest.raises(ValueError):
        DiscreteWfParams(10, np.eye(2), [-1.0, 0.0])


def test_step_stays_on_grid(general3):
    p = scaling_params(general3, [1.0, 0.0, 0.0], 137, "d,i")
    x = wf_step(np.tile([0.2, 0.3, 0.5], (500, 1)), p, np.random.default_rng(2))
    counts = x * p.N
    assert np.max(np.abs(counts - np.round(counts))) < 1e-9
    assert np.all(np.round(counts).sum(axis=1) == p.N)


def test_step_moments_match_offspring_law(general3):
    p = DiscreteWfParams(40, 0.9 * np.eye(3) + 0.1 * general3.P, np.array([0.1, 0.0, -0.05]))
    x0 = np.array([0.25, 0.5, 0.25])
    reps = 100_000
    x = wf_step(np.tile(x0, (reps, 1)), p, np.random.default_rng(3))
    q = offspring_law(x0, p)
    se = x.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(x.mean(axis=0) - q) <= 4 * se)
    centred = x - q
    prods = centred[:, :, None] * centred[:, None, :]
    cov_se = prods.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(prods.mean(axis=0) - (np.diag(q) - np.outer(q, q)) / p.N) <= 4 * cov_se)


@pytest.mark.parametrize("case, sigmas", [("d,i", [1.5, 0.0]), ("a,ii", [1.0, 0.0]), ("a,i", [0.0, 0.0])])
def test_increment_moments_match_simulation(case, sigmas):
    m = MutationModel(1.0, [[0.3, 0.7], [0.6, 0.4]])
    p = scaling_params(m, sigmas, 400, case)
    x0 = np.array([0.55, 0.45])
    drift, second = increment_moments(x0, p, p.alpha)
    reps = 100_000
    dx = wf_step(np.tile(x0, (reps, 1)), p, np.random.default_rng(4)) - x0
    inc = p.alpha * dx[:, 1]
    assert abs(inc.mean() - drift[1]) <= 4 * inc.std(ddof=1) / math.sqrt(reps)
    sq = p.alpha * dx[:, 1] ** 2
    assert abs(sq.mean() - second[1, 1]) <= 4 * sq.std(ddof=1) / math.sqrt(reps)


def test_vertex_drift_without_mutation():
    m = MutationModel(0.0, [[0.5, 0.5], [0.5, 0.5]])
    p = scaling_params(m, [1.0, 0.0], 1000, "a,ii")
    drift, _ = increment_moments(np.array([1.0, 0.0]), p, p.alpha)
    assert np.all(drift == 0.0)


def test_diffusive_scaling_convergence():
    conv = increment_limit_convergence(CBI_MODEL, [1.5, 0.0], np.array([0.6, 0.4]), "d,i", [1e3, 1e4, 1e5])
    assert conv.drift_slope == pytest.approx(-1.0, abs=0.1)
    assert conv.covariance_slope == pytest.approx(-1.0, abs=0.1)


def test_boundary_scaling_limits():
    x = np.array([0.6, 0.4])
    conv = increment_limit_convergence(CBI_MODEL, [1.0, 0.0], x, "a,ii", [1e3, 1e4, 1e5, 1e6])
    assert all(b < a for a, b in zip(conv.drift_errors, conv.drift_errors[1:]))
    assert all(b < a for a, b in zip(conv.covariance_errors, conv.covariance_errors[1:]))
    np.testing.assert_allclose(drift_limit(x, CBI_MODEL, [1.0, 0.0], "ii"), [0.12, -0.12])


def test_boundary_fluctuation_start_is_exact():
    rows = boundary_fluctuation_experiment(CBI_MODEL, [1.0], 0.0, [1000], 50, 7)
    p = scaling_params(CBI_MODEL, [1.0, 0.0], 1000, "a,ii")
    (row,) = rows
    assert row.var == 0.0
    assert row.mean == pytest.approx(round(1.0 / p.a_N * 1000) / 1000 * p.a_N, rel=1e-12)


def test_boundary_fluctuation_mean_tracks_cir():
    rows = boundary_fluctuation_experiment(CBI_MODEL, [1.0], 1.0, [10_000], 4000, 9)
    (row,) = rows
    assert row.mean_target == pytest.approx(cir_mean(1.0, CBI_MODEL.immigration[1], 1.0), rel=1e-2)
    assert abs(row.mean_gap) <= 4 * row.mean_se


def test_interior_contrast_ou_spread():
    m = PimModel(2.0, [0.6, 0.4]).to_mutation_model()
    cov, se, target = interior_fluctuation_experiment(m, 1.0, 10_000, 4000, 5)
    assert np.all(np.abs(cov - target) <= 4 * se)


def test_anomalous_scaling_trend():
    rows = anomalous_scaling_signature(CBI_MODEL, [1.0], 1.0, [1000, 10_000], 2000, 6)
    ratios = [r.ratio for r in rows]
    assert ratios[1] < ratios[0] / 3
