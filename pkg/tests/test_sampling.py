import math
from functools import lru_cache

import mpmath
import numpy as np
import pytest
from scipy.special import gammaln

from strongsel.core import MutationModel, PimModel
from strongsel.sampling import (
    configs_at_level,
    expansion_general,
    expansion_pim,
    gamma_approx,
    mc_oracle,
    pim_quadrature_oracle,
    q0,
    truncated_system_oracle,
    two_allele_asymptotic,
    two_allele_exact,
)

from conftest import random_irreducible


def recursion_oracle(m):
    """Per-order coefficients matched straight from the sampling recursion, without simplification.

    Mixed configurations divide the matched order by the unfit count; pure-fit ones
    come from the consistency condition at matching order.
    """
    d, theta, P = m.d, m.theta, m.P

    @lru_cache(maxsize=None)
    def qt(k, n):
        if k < 0 or min(n) < 0:
            return 0.0
        size = sum(n)
        if size == 0:
            return 1.0 if k == 0 else 0.0
        unfit = size - n[0]
        if unfit == 0:
            parent = (n[0] - 1,) + n[1:]
            out = qt(k, parent)
            if k >= 1:
                out -= sum(qt(k - 1, bump(parent, j)) for j in range(1, d))
            return out
        total = 0.0
        for i in range(1, d):
            total += n[i] * (n[i] - 1) * qt(k, drop(n, i))
            total += n[i] * theta * P[0, i] * qt(k, bump(drop(n, i), 0))
        if k >= 1:
            total += n[0] * (n[0] - 1) * qt(k - 1, drop(n, 0))
            total += (n[0] * theta * P[0, 0] - size * (size - 1 + theta)) * qt(k - 1, n)
            for i in range(1, d):
                for j in range(1, d):
                    total += n[i] * theta * P[j, i] * qt(k - 1, bump(drop(n, i), j))
                total += size * qt(k - 1, bump(n, i))
        if k >= 2:
            for j in range(1, d):
                total += n[0] * theta * P[j, 0] * qt(k - 2, bump(drop(n, 0), j))
        return total / unfit

    return qt


def drop(n, i):
    return tuple(v - (j == i) for j, v in enumerate(n))


def bump(n, i):
    return tuple(v + (j == i) for j, v in enumerate(n))


def test_q0_boundary_values(general3):
    assert q0((1, 0, 0), general3) == 1.0
    assert q0((5, 0, 0), general3) == 1.0
    for i in (1, 2):
        assert q0(bump((0, 0, 0), i), general3) == pytest.approx(general3.theta * general3.P[0, i], rel=1e-15)


def test_gamma_approx_examples(general3):
    value, gammas = gamma_approx((0, 0, 0), general3, 10.0)
    assert value == 1.0 and gammas.tolist() == [1.0]
    m2 = MutationModel(1.0, [[0.5, 0.5], [0.5, 0.5]])
    value, _ = gamma_approx((0, 1), m2, 100.0)
    assert value == pytest.approx(0.005, rel=1e-14)
    n = (3, 1, 2)
    _, gammas = gamma_approx(n, general3, 50.0)
    unfit = sum(n) - n[0]
    expected = -gammas[0] * n[0] * (general3.theta * (1 - general3.P[0, 0]) + unfit)
    assert gammas[1] == pytest.approx(expected, rel=1e-12)
    assert len(gammas) == n[0] + 1


def test_gamma_approx_matches_leading_and_pure_fit_terms(general3):
    table = expansion_general(general3, 6)
    for n in [(0, 1, 0), (2, 1, 1), (1, 0, 3)]:
        _, gammas = gamma_approx(n, general3, 100.0)
        assert gammas[0] == pytest.approx(table.get(0, n), rel=1e-12)
    for n_fit in range(1, 5):
        _, gammas = gamma_approx((n_fit, 0, 0), general3, 100.0)
        assert gammas[1] == pytest.approx(table.get(1, (n_fit, 0, 0)), rel=1e-12)
    _, gammas = gamma_approx((1, 1, 0), general3, 100.0)
    assert abs(gammas[1] - table.get(1, (1, 1, 0))) > 1e-3


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_expansion_general_matches_recursion_oracle(seed):
    m = random_irreducible(np.random.default_rng(seed), 3, theta=1.0)
    h_max = 6
    table = expansion_general(m, h_max)
    oracle = recursion_oracle(m)
    checked = 0
    for level in range(1, h_max + 1):
        for n in configs_at_level(level, 3):
            for k in range(h_max - level + 1):
                expected = oracle(k, n)
                assert table.get(k, n) == pytest.approx(expected, rel=1e-10, abs=1e-12), (k, n)
                checked += 1
    assert checked == len(table.coeffs)


def test_first_order_fit_coefficients(general3):
    table = expansion_general(general3, 7)
    out_rate = general3.theta * (1 - general3.P[0, 0])
    assert table.get(1, (1, 0, 0)) == pytest.approx(-out_rate, rel=1e-14)
    for n_fit in range(1, 7):
        assert table.get(1, (n_fit, 0, 0)) == pytest.approx(-n_fit * out_rate, rel=1e-12)


def test_fit_boundary_identity_is_exact(general3):
    table = expansion_general(general3, 6)
    e0 = (1, 0, 0)
    assert table.get(0, e0) == 1.0
    for k in range(1, 6):
        expected = -sum(table.get(k - 1, bump((0, 0, 0), i)) for i in (1, 2))
        assert table.get(k, e0) == expected


@pytest.mark.parametrize("seed", [4, 5])
def test_shift_identity_holds_on_tables(seed, general3):
    assert expansion_general(general3, 7).shift_identity_residual() < 1e-10
    m = random_irreducible(np.random.default_rng(seed), 4, theta=1.5)
    assert expansion_general(m, 5).shift_identity_residual() < 1e-10


def test_expansion_general_rejects_small_budget(general3):
    with pytest.raises(ValueError):
        expansion_general(general3, 0)


def test_table_budget_is_enforced(general3):
    table = expansion_general(general3, 3)
    with pytest.raises(KeyError):
        table.get(2, (1, 1, 0))
    with pytest.raises(ValueError):
        table.series((1, 1, 0), 2)


@pytest.mark.parametrize("Q", [[0.7, 0.3], [0.2, 0.5, 0.3]])
def test_expansion_pim_matches_general(Q):
    pim = PimModel(1.3, Q)
    closed = expansion_pim(pim, 8)
    general = expansion_general(pim.to_mutation_model(), 8)
    for (k, n), value in general.coeffs.items():
        assert closed.get(k, n) == pytest.approx(value, rel=1e-9, abs=1e-12), (k, n)


def test_expansion_pim_first_coefficient():
    pim = PimModel(2.0, [0.2, 0.5, 0.3])
    table = expansion_pim(pim, 6)
    theta, Q1 = pim.theta, pim.Q[0]
    for n in [(1, 1, 0), (2, 0, 2), (0, 1, 1), (3, 1, 0)]:
        lead = q0(n, pim.to_mutation_model())
        assert table.get(0, n) == pytest.approx(lead, rel=1e-14)
        r1 = (sum(n) - n[0] + theta * (1 - Q1)) * (1 - theta * Q1 - n[0])
        s1 = theta * (1 - Q1) * (1 - theta * Q1)
        assert table.get(1, n) == pytest.approx(lead * (r1 - s1), rel=1e-12)


def test_two_allele_asymptotic_is_pim_specialisation(pim2):
    table = expansion_pim(pim2, 9)
    for n in [(1, 2), (0, 3), (4, 1), (2, 0)]:
        series = two_allele_asymptotic(n, pim2, 9 - sum(n))
        assert series[0] == pytest.approx(math.exp(gammaln(n[1] + 0.3) - gammaln(0.3)), rel=1e-13)
        np.testing.assert_allclose(series, table.series(n), rtol=1e-12, atol=1e-14)
    assert two_allele_asymptotic((2, 0), pim2, 3)[0] == 1.0


def test_two_allele_exact_zero_argument(pim2):
    n = (2, 3)
    tq1, tq2, theta = 0.7, 0.3, 1.0
    expected = math.exp(gammaln(n[0] + tq1) + gammaln(n[1] + tq2) + gammaln(theta)
                        - gammaln(tq1) - gammaln(tq2) - gammaln(sum(n) + theta))
    assert two_allele_exact(n, pim2, 5.0, 5.0) == pytest.approx(expected, rel=1e-12)
    assert two_allele_exact((0, 0), pim2, 100.0) == 1.0


@pytest.mark.parametrize("sigma", [0.5, 20.0, 300.0, 5000.0])
def test_two_allele_exact_against_mpmath(pim2, sigma):
    n = (2, 1)
    mpmath.mp.dps = 40
    tq1, tq2, theta = mpmath.mpf("0.7"), mpmath.mpf("0.3"), mpmath.mpf(1)
    z = -mpmath.mpf(sigma)
    ref = (mpmath.rf(tq1, n[0]) * mpmath.rf(tq2, n[1]) / mpmath.rf(theta, sum(n))
           * mpmath.hyp1f1(n[1] + tq2, sum(n) + theta, z) / mpmath.hyp1f1(tq2, theta, z))
    assert two_allele_exact(n, pim2, sigma) == pytest.approx(float(ref), rel=1e-10)


def test_two_allele_exact_matches_quadrature():
    pim = PimModel(1.0, [0.5, 0.5])
    exact = two_allele_exact((1, 1), pim, 100.0)
    quad = pim_quadrature_oracle((1, 1), pim, [100.0, 0.0])
    assert quad.value == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("n", [(1, 0, 2), (2, 2, 1), (0, 3, 0)])
def test_quadrature_neutral_dirichlet_moments(n):
    pim = PimModel(1.5, [0.2, 0.5, 0.3])
    alpha = pim.theta * pim.Q
    expected = math.exp(sum(gammaln(a + k) - gammaln(a) for a, k in zip(alpha, n))
                        - gammaln(pim.theta + sum(n)) + gammaln(pim.theta))
    assert pim_quadrature_oracle(n, pim, [0.0, 0.0, 0.0]).value == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("pim, sigmas", [
    (PimModel(1.0, [0.7, 0.3]), [200.0, 0.0]),
    (PimModel(2.0, [0.2, 0.5, 0.3]), [80.0, 0.0, 0.0]),
    (PimModel(2.0, [0.2, 0.5, 0.3]), [50.0, 3.0, -2.0]),
])
def test_quadrature_consistency(pim, sigmas):
    for n in [(1,) + (0,) * (pim.d - 1), (1, 1) + (0,) * (pim.d - 2), (0, 2) + (0,) * (pim.d - 2)]:
        parent = pim_quadrature_oracle(n, pim, sigmas)
        children = [pim_quadrature_oracle(bump(n, i), pim, sigmas) for i in range(pim.d)]
        total = sum(c.value for c in children)
        err = parent.error_estimate + sum(c.error_estimate for c in children)
        assert abs(total - parent.value) <= max(3 * err, 1e-12 * parent.value)


def test_quadrature_rejects_unsupported_models():
    with pytest.raises(ValueError):
        pim_quadrature_oracle((1, 0, 0, 0), PimModel(1.0, [0.25] * 4), [1.0, 0, 0, 0])
    with pytest.raises(ValueError):
        pim_quadrature_oracle((1, 0), PimModel(1.0, [1.0, 0.0]), [1.0, 0])


@pytest.mark.parametrize("sigma", [100.0, 400.0])
def test_truncated_system_matches_quadrature_two_alleles(pim2, sigma):
    configs = [(1, 0), (0, 1), (1, 2), (2, 2), (0, 3)]
    cap = max(sum(n) for n in configs) + 6
    results = truncated_system_oracle(pim2.to_mutation_model(), sigma, cap)
    for n in configs:
        quad = pim_quadrature_oracle(n, pim2, [sigma, 0.0])
        tol = max(1e-6 * quad.value, 3 * results[n].error_estimate)
        assert abs(results[n].value - quad.value) <= tol, n


def test_truncated_system_matches_quadrature_three_alleles():
    pim = PimModel(2.0, [0.2, 0.5, 0.3])
    sigma = 150.0
    results = truncated_system_oracle(pim.to_mutation_model(), sigma, 16)
    for n in [(1, 1, 0), (0, 1, 1), (2, 0, 1), (3, 1, 1)]:
        quad = pim_quadrature_oracle(n, pim, [sigma, 0.0, 0.0])
        assert results[n].value == pytest.approx(quad.value, rel=1e-6), n


def test_truncated_system_basic_properties(general3):
    results = truncated_system_oracle(general3, 100.0, 20)
    assert results[(0, 0, 0)].value == 1.0
    for i in range(3):
        assert 0.0 < results[bump((0, 0, 0), i)].value < 1.0
    for level in range(0, 10):
        for n in configs_at_level(level, 3):
            total = sum(results[bump(n, i)].value for i in range(3))
            assert abs(total - results[n].value) <= 1e-8


def test_truncated_system_rejects_reducible_model():
    with pytest.raises(ValueError):
        truncated_system_oracle(MutationModel(1.0, np.eye(2)), 100.0, 6)


def test_mc_oracle_trivial_and_seeded(pim2):
    m = pim2.to_mutation_model()
    assert mc_oracle(m, 50.0, (0, 0), replicates=20, sample_time=0.1, burn_in=0.1).value == 1.0
    a = mc_oracle(m, 50.0, (0, 1), replicates=20, sample_time=0.1, burn_in=0.1, seed=3)
    b = mc_oracle(m, 50.0, (0, 1), replicates=20, sample_time=0.1, burn_in=0.1, seed=3)
    assert a.value == b.value and a.error_estimate == b.error_estimate


def test_mc_oracle_matches_truncated_system_parent_dependent(general3):
    sigma = 200.0
    exact = truncated_system_oracle(general3, sigma, 14)
    for n in [(0, 1, 0), (0, 0, 1)]:
        est = mc_oracle(general3, sigma, n, replicates=400, sample_time=1.0, burn_in=0.2, seed=17)
        assert abs(est.value - exact[n].value) <= 3 * est.error_estimate, (n, est, exact[n])
