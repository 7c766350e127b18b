"""Limiting duality between the fast ancestral process and the CBI diffusion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .ancestral import fast_process_at
from .core import as_config, log_gamma_ratio
from .diffusion import cbi_sample, cir_mean, cir_transition_sample


@dataclass(frozen=True)
class DualityPoint:
    """CBI coordinates z (z_0 = -sum of the rest) and a sample configuration n."""

    z: tuple
    n: tuple

    def __post_init__(self):
        z = tuple(float(v) for v in self.z)
        n = as_config(self.n, len(z))
        if any(v < 0 for v in z[1:]):
            raise ValueError("unfit CBI coordinates must be >= 0")
        if abs(sum(z)) > 1e-9 * max(1.0, sum(z[1:])):
            raise ValueError("CBI coordinates must sum to zero")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_unfit(cls, unfit, n):
        unfit = tuple(float(v) for v in unfit)
        return cls((-math.fsum(unfit),) + unfit, n)


def _log_q0_unfit(n, imm):
    out = []
    for i in range(1, len(n)):
        if n[i] and imm[i] == 0:
            raise ValueError(f"duality function undefined: theta P_0{i} = 0 with n_{i} > 0")
        out.append(log_gamma_ratio(imm[i], n[i]))
    return math.fsum(out)


def log_duality_H(z, n, m):
    imm = m.immigration
    log_q0 = _log_q0_unfit(n, imm)
    total = -log_q0
    for i in range(1, m.d):
        if n[i]:
            if z[i] == 0:
                return -math.inf
            total += n[i] * math.log(z[i])
    return total


def duality_H(p, m):
    """H(z, n) = prod_{i>=1} z_i^{n_i} / q0(n)."""
    return math.exp(log_duality_H(p.z, p.n, m))


def duality_H_component(z_i, n_i, a):
    """Gamma(a) / Gamma(a + n_i) z_i^{n_i}."""
    if n_i == 0:
        return 1.0
    if a == 0:
        raise ValueError("component duality function undefined for zero immigration")
    if z_i == 0:
        return 0.0
    return math.exp(n_i * math.log(z_i) - log_gamma_ratio(a, n_i))


# --- generator identity ----------------------------------------------------------

def fast_generator_H(p, m):
    """Discrete generator of the fast process applied to n -> H(z, n)."""
    imm = m.immigration
    n = p.n
    h = duality_H(p, m)
    total = 0.0
    for i in range(1, m.d):
        if n[i] == 0:
            continue
        denom = n[i] - 1 + imm[i]
        down = list(n)
        down[i] -= 1
        to_fit = list(down)
        to_fit[0] += 1
        h_down = duality_H(DualityPoint(p.z, down), m)
        h_fit = duality_H(DualityPoint(p.z, to_fit), m)
        total += 0.5 * n[i] * (n[i] - 1) / denom * (h_down - h)
        total += 0.5 * n[i] * imm[i] / denom * (h_fit - h)
    return total


def cbi_generator_H(p, m):
    """Limiting diffusion generator applied to z -> H(z, n), monomial derivatives in closed form."""
    imm = m.immigration
    n, z = p.n, p.z
    inv_q0 = math.exp(-_log_q0_unfit(n, imm))
    total = 0.0
    for i in range(1, m.d):
        if n[i] == 0:
            continue
        rest = inv_q0
        for j in range(1, m.d):
            if j != i:
                rest *= z[j] ** n[j]
        first = n[i] * z[i] ** (n[i] - 1) * rest
        second = n[i] * (n[i] - 1) * z[i] ** (n[i] - 2) * rest if n[i] >= 2 else 0.0
        total += 0.5 * z[i] * second + 0.5 * (imm[i] - z[i]) * first
    return total


def closed_form_generator_H(p, m):
    """(1/2) sum_i (n_i / z_i)(n_i - 1 + theta P_0i - z_i) H; needs z_i > 0 wherever n_i > 0."""
    imm = m.immigration
    h = duality_H(p, m)
    total = 0.0
    for i in range(1, m.d):
        if p.n[i]:
            if p.z[i] <= 0:
                raise ValueError("closed form needs z_i > 0 where n_i > 0")
            total += p.n[i] / p.z[i] * (p.n[i] - 1 + imm[i] - p.z[i])
    return 0.5 * total * h


def finite_difference_generator_H(p, m, rel_step=1e-5):
    """Central finite differences of the CBI generator, evaluated in exact rational arithmetic.

    The monomial is evaluated with Fractions so the differences carry only
    truncation error, not cancellation.
    """
    imm = m.immigration
    inv_q0 = Fraction(math.exp(-_log_q0_unfit(p.n, imm)))
    z = [Fraction(v) for v in p.z]

    def h_at(zz):
        out = inv_q0
        for j in range(1, m.d):
            out *= zz[j] ** p.n[j]
        return out

    h0 = h_at(z)
    total = Fraction(0)
    for i in range(1, m.d):
        step = Fraction(rel_step * max(1.0, p.z[i]))
        up, down = list(z), list(z)
        up[i] += step
        down[i] -= step
        h_up, h_down = h_at(up), h_at(down)
        first = (h_up - h_down) / (2 * step)
        second = (h_up - 2 * h0 + h_down) / step**2
        total += z[i] * second / 2 + (Fraction(imm[i]) - z[i]) * first / 2
    return float(total)


@dataclass(frozen=True)
class GeneratorCheck:
    points: int
    analytic_residual: float
    closed_form_residual: float
    finite_difference_residual: float


def generator_duality_check(points, m, rel_step=1e-5):
    """Max residuals |G H - L0 H| over a grid of DualityPoints.

    L0 H is computed from exact monomial derivatives and, separately, by finite
    differences; the closed form is compared where every needed z_i > 0.
    """
    analytic = closed = fd = 0.0
    count = 0
    for p in points:
        g = fast_generator_H(p, m)
        lo = cbi_generator_H(p, m)
        analytic = max(analytic, abs(g - lo))
        if all(p.z[i] > 0 for i in range(1, m.d) if p.n[i]):
            c = closed_form_generator_H(p, m)
            closed = max(closed, abs(g - c), abs(lo - c))
        fd = max(fd, abs(g - finite_difference_generator_H(p, m, rel_step)))
        count += 1
    return GeneratorCheck(count, analytic, closed, fd)


def random_duality_grid(m, count, rng, max_count=3, z_range=(0.1, 3.0)):
    points = []
    for _ in range(count):
        unfit = rng.uniform(*z_range, size=m.d - 1)
        n = rng.integers(0, max_count + 1, size=m.d)
        points.append(DualityPoint.from_unfit(unfit, n))
    return points


def fast_process_compatibility(p, m):
    """Max over unfit types of the gap between H(z, n - e_i), H(z, n - e_i + e_0) and ((n_i - 1 + a_i)/z_i) H(z, n)."""
    imm = m.immigration
    h = duality_H(p, m)
    worst = 0.0
    for i in range(1, m.d):
        if p.n[i] == 0:
            continue
        down = list(p.n)
        down[i] -= 1
        to_fit = list(down)
        to_fit[0] += 1
        target = (p.n[i] - 1 + imm[i]) / p.z[i] * h
        for other in (down, to_fit):
            worst = max(worst, abs(duality_H(DualityPoint(p.z, other), m) - target))
    return worst


# --- Monte Carlo duality -------------------------------------------------------------

@dataclass(frozen=True)
class DualityEstimate:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    confidence: float = 0.99

    @property
    def half_widths(self):
        zq = stats.norm.ppf(0.5 + 0.5 * self.confidence)
        return zq * self.lhs_se, zq * self.rhs_se

    @property
    def overlap(self):
        wl, wr = self.half_widths
        return abs(self.lhs - self.rhs) <= wl + wr


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _H_rows(z_unfit, counts, m):
    """H evaluated row-wise: z_unfit (R, d-1) or (d-1,), counts (R, d) or (d,)."""
    imm = m.immigration[1:]
    z_unfit = np.asarray(z_unfit, dtype=float)
    counts = np.asarray(counts)
    z_b, n_b = np.broadcast_arrays(z_unfit, counts[..., 1:])
    log_q0 = np.zeros(n_b.shape[:-1])
    for i, a in enumerate(imm):
        k = n_b[..., i]
        if np.any((k > 0) & (a == 0)):
            raise ValueError("duality function undefined: zero immigration with n_i > 0")
        kmax = int(k.max()) if k.size else 0
        table = np.array([log_gamma_ratio(a, j) for j in range(kmax + 1)])
        log_q0 += table[k]
    with np.errstate(divide="ignore"):
        logs = np.where(n_b > 0, n_b * np.log(np.where(n_b > 0, z_b, 1.0)), 0.0)
    return np.exp(logs.sum(axis=-1) - log_q0)


def mc_duality_experiment(z0, n0, t, replicates, seed, m, confidence=0.99):
    """Both sides of E[H(Z(t), n0) | z0] = E[H(z0, M(t)) | n0], each with its standard error.

    The left side uses exact CBI transitions, the right side the fast jump
    chain stopped at t; the two use independent child streams of ``seed``.
    """
    n0 = as_config(n0, m.d)
    unfit = np.asarray(z0[1:] if len(z0) == m.d else z0, dtype=float)
    lhs_rng, rhs_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    z_t = cbi_sample(m, unfit, t, replicates, lhs_rng)
    lhs, lhs_se = _mean_se(_H_rows(z_t, n0, m))
    m_t = fast_process_at(n0, m, t, replicates, rhs_rng)
    rhs, rhs_se = _mean_se(_H_rows(unfit, m_t, m))
    return DualityEstimate(lhs, lhs_se, rhs, rhs_se, confidence)


@dataclass(frozen=True)
class ComponentDuality:
    estimate: DualityEstimate
    exact: float

    @property
    def lhs_within(self):
        return self._within(self.estimate.lhs, self.estimate.lhs_se)

    @property
    def rhs_within(self):
        return self._within(self.estimate.rhs, self.estimate.rhs_se)

    def _within(self, value, se, n_se=3.0):
        return abs(value - self.exact) <= n_se * se if se > 0 else value == self.exact


def component_exact(z_i, n_i, a, t):
    """E[H_i(z_i, M_i(t))] with M_i(t) ~ Binomial(n_i, e^{-t/2}), the law of the linear death chain."""
    survive = math.exp(-0.5 * t)
    return math.fsum(stats.binom.pmf(k, n_i, survive) * duality_H_component(z_i, k, a) for k in range(n_i + 1))


def componentwise_duality_check(i, z_i, n_i, t, replicates, seed, m, confidence=0.99):
    """One-coordinate duality: CIR transitions on the left, the linear death chain on the right.

    Both sides are also compared with the exact value from the binomial law of
    the death chain (for n_i = 1 this is the CIR mean divided by theta P_0i).
    """
    if not 1 <= i < m.d:
        raise ValueError("i must index an unfit type")
    a = m.immigration[i]
    lhs_rng, rhs_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    z_t = cir_transition_sample(z_i, a, t, lhs_rng, size=replicates)
    lhs_vals = np.array([duality_H_component(v, n_i, a) for v in z_t]) if n_i else np.ones(replicates)
    single = np.zeros(m.d, dtype=int)
    single[i] = n_i
    m_t = fast_process_at(tuple(single), m, t, replicates, rhs_rng)[:, i]
    table = np.array([duality_H_component(z_i, k, a) for k in range(n_i + 1)])
    rhs_vals = table[m_t]
    lhs, lhs_se = _mean_se(lhs_vals)
    rhs, rhs_se = _mean_se(rhs_vals)
    exact = component_exact(z_i, n_i, a, t)
    if n_i == 1:
        # the CIR mean gives the same number by the forward route
        exact_forward = cir_mean(z_i, a, t) / a
        if abs(exact_forward - exact) > 1e-12 * max(1.0, exact):
            raise ArithmeticError("forward and backward exact values disagree")
    return ComponentDuality(DualityEstimate(lhs, lhs_se, rhs, rhs_se, confidence), exact)
