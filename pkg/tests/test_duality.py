import math

import numpy as np
import pytest

from strongsel.core import MutationModel
from strongsel.duality import (
    DualityPoint,
    cbi_generator_H,
    closed_form_generator_H,
    component_exact,
    componentwise_duality_check,
    duality_H,
    duality_H_component,
    fast_generator_H,
    fast_process_compatibility,
    finite_difference_generator_H,
    generator_duality_check,
    mc_duality_experiment,
    random_duality_grid,
)


@pytest.fixture
def two_allele():
    # theta P_01 = 1
    return MutationModel(2.0, [[0.5, 0.5], [0.5, 0.5]])


def test_duality_function_examples(two_allele, general3):
    assert duality_H(DualityPoint.from_unfit([0.7, 2.0], (0, 0, 0)), general3) == 1.0
    assert duality_H(DualityPoint.from_unfit([0.7, 2.0], (1, 0, 0)), general3) == 1.0
    assert duality_H(DualityPoint.from_unfit([1.0], (0, 2)), two_allele) == pytest.approx(0.5, rel=1e-15)


def test_duality_point_validation():
    with pytest.raises(ValueError):
        DualityPoint((0.0, -1.0), (0, 1))
    with pytest.raises(ValueError):
        DualityPoint((0.5, 1.0), (0, 1))


def test_generator_sample_point(two_allele):
    p = DualityPoint.from_unfit([1.0], (0, 2))
    for gen in (fast_generator_H, cbi_generator_H, closed_form_generator_H):
        assert gen(p, two_allele) == pytest.approx(0.5, rel=1e-14)
    assert finite_difference_generator_H(p, two_allele) == pytest.approx(0.5, abs=1e-8)


def test_generator_constant_function(general3):
    p = DualityPoint.from_unfit([0.4, 1.1], (0, 0, 0))
    assert fast_generator_H(p, general3) == 0.0
    assert cbi_generator_H(p, general3) == 0.0


def test_generator_identity_random_grid_d4():
    m = MutationModel(2.5, [[0.1, 0.3, 0.4, 0.2], [0.25] * 4, [0.4, 0.2, 0.2, 0.2], [0.3, 0.3, 0.1, 0.3]])
    points = random_duality_grid(m, 200, np.random.default_rng(8))
    check = generator_duality_check(points, m)
    assert check.points == 200
    assert check.analytic_residual < 1e-10
    assert check.closed_form_residual < 1e-10
    assert check.finite_difference_residual < 1e-6


def test_product_structure(general3):
    rng = np.random.default_rng(12)
    imm = general3.immigration
    for p in random_duality_grid(general3, 50, rng, max_count=4):
        product = math.prod(duality_H_component(p.z[i], p.n[i], imm[i]) for i in range(1, 3))
        assert duality_H(p, general3) == pytest.approx(product, rel=1e-13)


def test_fast_process_compatibility(general3):
    for p in random_duality_grid(general3, 30, np.random.default_rng(3)):
        h = duality_H(p, general3)
        assert fast_process_compatibility(p, general3) <= 1e-12 * max(1.0, h)


def test_mc_trivial_starts(two_allele):
    for n0 in [(1, 0), (0, 0)]:
        est = mc_duality_experiment([1.3], n0, 0.7, 200, 1, two_allele)
        assert est.lhs == est.rhs == 1.0
        assert est.lhs_se == est.rhs_se == 0.0


def test_mc_two_sides_overlap():
    m = MutationModel(1.0, [[0.5, 0.5], [0.5, 0.5]])
    est = mc_duality_experiment([1.3], (0, 2), 0.7, 100_000, 21, m)
    assert est.overlap


def test_component_zero_count(general3):
    out = componentwise_duality_check(1, 0.9, 0, 1.0, 500, 2, general3)
    assert out.estimate.lhs == out.estimate.rhs == out.exact == 1.0


@pytest.mark.parametrize("n_i", [1, 3])
def test_component_duality_against_exact(general3, n_i):
    out = componentwise_duality_check(2, 0.9, n_i, 1.2, 50_000, 5, general3)
    assert out.lhs_within and out.rhs_within
    if n_i == 1:
        a = general3.immigration[2]
        decay = math.exp(-0.6)
        assert out.exact == pytest.approx((a * (1 - decay) + 0.9 * decay) / a, rel=1e-13)


def test_component_exact_at_time_zero_limit(general3):
    a = general3.immigration[1]
    assert component_exact(0.9, 2, a, 1e-12) == pytest.approx(duality_H_component(0.9, 2, a), rel=1e-9)
