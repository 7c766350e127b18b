"""The primary acceptance suite: eleven end-to-end checks with fixed models, seeds and tolerances."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .ancestral import AsgState, asg_rates, fast_rate_distance
from .core import MutationModel, PimModel
from .diffusion import (
    MomentComparison,
    cir_mean,
    cir_transition_sample,
    gaussian_moments_solve,
    scaled_fluctuation_compare,
)
from .discrete_wf import boundary_fluctuation_experiment, increment_limit_convergence, monotone_approach
from .duality import generator_duality_check, mc_duality_experiment, random_duality_grid
from .sampling import (
    SamplingProbabilities,
    configs_at_level,
    expansion_general,
    expansion_pim,
    mc_oracle_panel,
    pim_quadrature_oracle,
    truncated_system_oracle,
    two_allele_asymptotic,
    two_allele_exact,
)

# models shared by several criteria
GENERAL_3 = MutationModel(2.0, [[0.2, 0.5, 0.3], [0.3, 0.3, 0.4], [0.5, 0.25, 0.25]])
SPARSE_3 = MutationModel(2.0, [[0.9, 0.05, 0.05], [0.5, 0.0, 0.5], [0.2, 0.8, 0.0]])
GENERAL_4 = MutationModel(2.5, [[0.1, 0.3, 0.4, 0.2], [0.25, 0.25, 0.25, 0.25],
                                [0.4, 0.2, 0.2, 0.2], [0.3, 0.3, 0.1, 0.3]])


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title}: {self.summary} ({self.seconds:.1f} s)"


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def coefficient_cross_check(seed=2024):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in (2, 3):
        for theta in (0.5, 1.0, 2.0):
            pim = PimModel(theta, rng.dirichlet(np.ones(d)))
            general = expansion_general(pim.to_mutation_model(), 8)
            closed = expansion_pim(pim, 8)
            for key, a in general.coeffs.items():
                b = closed.coeffs[key]
                scale = max(abs(a), abs(b))
                if scale > 0:
                    worst = max(worst, abs(a - b) / scale)
    return worst


def criterion_1():
    t0 = time.perf_counter()
    worst = coefficient_cross_check()
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5.0
    return CriterionResult(1, "coefficient cross-check", ok,
                           f"max relative gap {worst:.2e} (<= 1e-9), runtime limit 5 s",
                           metrics={"max_rel_gap": worst})


def criterion_2():
    pim = PimModel(1.0, [0.7, 0.3])
    n = (1, 2)
    sigmas = [50.0, 100.0, 200.0, 400.0, 800.0]
    coeffs = two_allele_asymptotic(n, pim, 2)
    unfit = sum(n) - n[0]
    slopes = {}
    for K in (0, 1, 2):
        residuals = []
        for s in sigmas:
            q = two_allele_exact(n, pim, s)
            partial = math.fsum(coeffs[k] * s**-k for k in range(K + 1))
            residuals.append(abs(s**unfit * q - partial))
        slopes[K] = _slope(sigmas, residuals)
    ok = all(abs(slopes[K] + K + 1) <= 0.5 for K in slopes)
    text = ", ".join(f"K={K}: {v:.3f}" for K, v in slopes.items())
    return CriterionResult(2, "two-allele exact vs expansion", ok, f"slopes {text} (target -(K+1) +/- 0.5)",
                           metrics={"slopes": slopes})


def criterion_3(replicates=1000, seed=11):
    pim = PimModel(2.0, [0.5, 0.5])
    m = pim.to_mutation_model()
    panel = [(1, 0), (0, 1), (1, 1), (0, 2), (2, 1), (1, 2)]
    worst = 0.0
    failures = []
    for s in (50.0, 200.0):
        cap = max(sum(n) for n in panel) + 8
        lin = truncated_system_oracle(m, s, cap)
        mc = mc_oracle_panel(m, s, panel, replicates=replicates, burn_in=40.0 / s, seed=seed)
        for n, mc_r in zip(panel, mc):
            quad = pim_quadrature_oracle(n, pim, [s, 0.0])
            trio = {"quadrature": quad, "linsys": lin[n], "mc": mc_r}
            names = list(trio)
            for a in range(3):
                for b in range(a + 1, 3):
                    ra, rb = trio[names[a]], trio[names[b]]
                    allowed = max(1e-6, 3.0 * math.hypot(ra.error_estimate, rb.error_estimate))
                    gap = abs(ra.value - rb.value)
                    worst = max(worst, gap / allowed)
                    if gap > allowed:
                        failures.append((s, n, names[a], names[b], gap, allowed))
    ok = not failures
    return CriterionResult(3, "oracle triangle", ok,
                           f"worst gap / allowance {worst:.2f} over 2 sigmas x 6 configs x 3 pairs",
                           metrics={"worst_ratio": worst, "failures": failures})


def consistency_residual(m, sigma, level_cap):
    """Largest |sum_i q(n + e_i) - q(n)| over interior levels 1 <= |n| <= level_cap // 2."""
    sp = SamplingProbabilities.from_truncated_system(m, sigma, level_cap)
    worst = 0.0
    for level in range(1, level_cap // 2 + 1):
        for n in configs_at_level(level, m.d):
            up = math.fsum(sp(tuple(v + (j == i) for j, v in enumerate(n))) for i in range(m.d))
            worst = max(worst, abs(up - sp(n)))
    return worst


def criterion_4():
    worst = 0.0
    for m in (GENERAL_3, SPARSE_3):
        for s in (100.0, 1000.0):
            worst = max(worst, consistency_residual(m, s, 20))
    ok = worst <= 1e-8
    return CriterionResult(4, "consistency condition", ok,
                           f"max interior residual {worst:.2e} (<= 1e-8), levels 1..10 of a level-20 solve",
                           metrics={"max_residual": worst})


def criterion_5(seed=5):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    models = (MutationModel(1.0, [[0.5, 0.5], [0.5, 0.5]]), GENERAL_3, GENERAL_4)
    analytic = fd = 0.0
    for m, count in zip(models, (66, 67, 67)):
        check = generator_duality_check(random_duality_grid(m, count, rng), m)
        analytic = max(analytic, check.analytic_residual, check.closed_form_residual)
        fd = max(fd, check.finite_difference_residual)
    elapsed = time.perf_counter() - t0
    ok = analytic < 1e-10 and fd < 1e-6 and elapsed < 1.0
    return CriterionResult(5, "generator duality", ok,
                           f"analytic {analytic:.2e} (< 1e-10), finite-difference {fd:.2e} (< 1e-6), 200 points over d = 2, 3, 4",
                           metrics={"analytic": analytic, "finite_difference": fd})


def criterion_6(replicates=100_000, seed=6):
    cases = [
        (MutationModel(1.0, [[0.5, 0.5], [0.5, 0.5]]), (1.3,), (0, 2), 0.7),
        (GENERAL_3, (0.8, 0.4), (1, 2, 1), 1.0),
        (GENERAL_4, (0.8, 0.4, 1.1), (0, 1, 2, 1), 0.5),
    ]
    t0 = time.perf_counter()
    estimates = [mc_duality_experiment(z, n, t, replicates, seed + k, m)
                 for k, (m, z, n, t) in enumerate(cases)]
    elapsed = time.perf_counter() - t0
    ok = all(e.overlap for e in estimates) and elapsed < 60.0
    text = "; ".join(f"{e.lhs:.4f}+/-{e.lhs_se:.4f} vs {e.rhs:.4f}+/-{e.rhs_se:.4f}" for e in estimates)
    return CriterionResult(6, "Monte Carlo duality", ok, f"99% intervals overlap in all 3 cases: {text}",
                           metrics={"estimates": estimates})


def criterion_7(seed=7):
    rng = np.random.default_rng(seed)
    z, a, t = 1.2, 0.8, 0.9
    draws = cir_transition_sample(z, a, t, rng, size=1_000_000)
    mean_z = (draws.mean() - cir_mean(z, a, t)) / (draws.std(ddof=1) / 1000.0)
    stationary = cir_transition_sample(0.5, a, 60.0, rng, size=100_000)
    ks_p = stats.kstest(stationary, stats.gamma(a).cdf).pvalue
    z_atom, t_atom = 0.7, 1.5
    zero = cir_transition_sample(z_atom, 0.0, t_atom, rng, size=1_000_000) == 0.0
    decay = math.exp(-0.5 * t_atom)
    p_atom = math.exp(-decay * z_atom / (1.0 - decay))
    atom_z = (zero.mean() - p_atom) / math.sqrt(p_atom * (1 - p_atom) / zero.size)
    ok = abs(mean_z) <= 4 and ks_p > 0.01 and abs(atom_z) <= 4
    return CriterionResult(7, "CIR exactness", ok,
                           f"mean z-score {mean_z:+.2f}, KS p = {ks_p:.3f}, atom z-score {atom_z:+.2f}",
                           metrics={"mean_z": mean_z, "ks_p": ks_p, "atom_z": atom_z})


def criterion_8(replicates=20_000, seed=8):
    m = MutationModel(1.0, [[0.0, 1.0], [0.5, 0.5]])
    a = m.immigration[1]
    report = scaled_fluctuation_compare(m, 200.0, 20.0, replicates, seed, dt_scaled=0.01)
    observed = [r for r in report["cbi"] if r.name.startswith("sigma(1-X0)") and r.name.endswith("vs exact")]
    gamma_moments = (a, a + a * a)
    rows = [MomentComparison(r.name.replace("vs exact", "vs Gamma"), r.observed, g, r.se)
            for r, g in zip(observed, gamma_moments)]
    ok = all(r.within(3.0) for r in rows)
    text = ", ".join(f"{r.name}: z = {r.z_score:+.2f}" for r in rows)
    return CriterionResult(8, "WF to CBI fluctuations", ok, text, metrics={"rows": rows})


def criterion_9():
    xi0 = np.array([0.5, 0.3, 0.2])
    mean0 = np.array([0.1, -0.04, -0.06])
    v = np.array([1.0, -0.5, -0.5])
    cov0 = 0.2 * np.outer(v, v)
    last = gaussian_moments_solve(xi0, mean0, cov0, 60.0, 0.01)[-1]
    m_norm = float(np.linalg.norm(last.mean))
    c_norm = float(np.linalg.norm(last.cov))
    ok = m_norm < 1e-6 and c_norm < 1e-6
    return CriterionResult(9, "Gaussian degeneration", ok, f"|m(60)| = {m_norm:.2e}, |C(60)| = {c_norm:.2e} (< 1e-6)",
                           metrics={"mean_norm": m_norm, "cov_norm": c_norm})


def criterion_10(seed=10):
    rng = np.random.default_rng(seed)
    m = GENERAL_3
    sp = SamplingProbabilities.from_truncated_system(m, 100.0, 16)
    worst = 0.0
    for _ in range(100):
        n = tuple(int(v) for v in rng.integers(0, 4, 3))
        nu = (0,) + tuple(int(v) for v in rng.integers(0, 3, 2))
        if sum(n) + sum(nu) == 0:
            n = (1, 0, 0)
        worst = max(worst, asg_rates(AsgState(n, nu), m, 100.0, sp).relative_discrepancy)
    states = [AsgState((2, 1, 1), (0, 1, 0)), AsgState((1, 2, 0), (0, 0, 1)), AsgState((0, 1, 1))]
    sigmas = [1e2, 1e3, 1e4]
    distances = []
    for s in sigmas:
        provider = SamplingProbabilities.from_truncated_system(m, s, 12)
        distances.append(max(fast_rate_distance(st, m, s, provider) for st in states))
    slope = _slope(sigmas, distances)
    ok = worst <= 1e-9 and abs(slope + 1) <= 0.1
    return CriterionResult(10, "ASG total rate and fast limit", ok,
                           f"max total-rate discrepancy {worst:.2e} (<= 1e-9), fast-limit slope {slope:.3f} (-1 +/- 0.1)",
                           metrics={"total_rate": worst, "slope": slope, "distances": distances})


def criterion_11(replicates=20_000, seed=12):
    m = MutationModel(1.0, [[0.0, 1.0], [0.5, 0.5]])
    x = np.array([0.6, 0.4])
    N_list = [1e3, 1e4, 1e5]
    d_i = increment_limit_convergence(m, [1.5, 0.0], x, "d,i", N_list)
    a_ii = increment_limit_convergence(m, [1.0, 0.0], x, "a,ii", N_list)
    slopes = {"d,i drift": d_i.drift_slope, "d,i cov": d_i.covariance_slope,
              "a,ii drift": a_ii.drift_slope, "a,ii cov": a_ii.covariance_slope}
    slopes_ok = {k: abs(v + 1) <= 0.1 for k, v in slopes.items()}
    rows = boundary_fluctuation_experiment(m, [1.0], 1.0, [1000, 10000, 100000], replicates, seed)
    trend = monotone_approach(rows)
    ok = all(slopes_ok.values()) and all(trend.values())
    text = ", ".join(f"{k} {v:.3f}" for k, v in slopes.items())
    trend_text = ", ".join(f"Z{c} {name}: {'ok' if v else 'no'}" for (c, name), v in trend.items())
    return CriterionResult(11, "discrete WF scaling", ok,
                           f"slopes in N (target -1 +/- 0.1): {text}; boundary moments trend: {trend_text}",
                           metrics={"slopes": slopes, "slopes_ok": slopes_ok, "trend": trend, "rows": rows})


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def run_criterion(number):
    t0 = time.perf_counter()
    result = CRITERIA[number]()
    result.seconds = time.perf_counter() - t0
    return result


def run_suite(numbers=None, echo=print):
    results = []
    for k in numbers or sorted(CRITERIA):
        result = run_criterion(k)
        if echo:
            echo(result.line())
        results.append(result)
    return results
