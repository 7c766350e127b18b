"""Sampling probabilities q(n) under strong selection on allele 0.

The expansion coefficients qtilde_k(n) satisfy

    sigma^(|n| - n_0) q(n) ~ sum_k qtilde_k(n) sigma^(-k),

and are computed either by the general dynamic programme or by the closed
form available under parent-independent mutation.  Finite-sigma values come
from three independent oracles: quadrature of the stationary density (PIM),
the truncated linear recursion, and long-run diffusion simulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import splu
from scipy.special import gammaln, roots_jacobi

from .core import (
    MutationModel,
    PimModel,
    as_config,
    log_gamma_ratio,
    rising_factorial,
)


class QuadratureError(RuntimeError):
    """Quadrature did not converge; carries the last two refinement values."""

    def __init__(self, message, last_values=None):
        super().__init__(message)
        self.last_values = last_values


def configs_at_level(level, d):
    """All count vectors of length d summing to level, in lexicographic order."""
    for bars in itertools.combinations(range(level + d - 1), d - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(level + d - 2 - prev)
        yield tuple(out)


def _shift(n, minus=None, plus=None):
    n = list(n)
    if minus is not None:
        n[minus] -= 1
    if plus is not None:
        n[plus] += 1
    return tuple(n)


@dataclass
class ExpansionTable:
    """Coefficients qtilde_k(n) for all k + |n| <= max_budget."""

    max_budget: int
    d: int
    coeffs: dict = field(default_factory=dict)

    def get(self, k, n):
        if k < 0 or min(n) < 0:
            return 0.0
        if not any(n):
            return 1.0 if k == 0 else 0.0
        try:
            return self.coeffs[(k, n)]
        except KeyError:
            raise KeyError(f"qtilde_{k}{n} is outside the budget {self.max_budget}") from None

    def series(self, n, K=None):
        n = as_config(n, self.d)
        top = self.max_budget - sum(n)
        K = top if K is None else K
        if K > top:
            raise ValueError(f"order {K} exceeds the budget for |n| = {sum(n)}")
        return np.array([self.get(k, n) for k in range(K + 1)])

    def evaluate(self, n, sigma, K):
        """Truncated expansion sigma^-(|n|-n_0) sum_{k<=K} qtilde_k sigma^-k."""
        n = as_config(n, self.d)
        coef = self.series(n, K)
        return sigma ** -(sum(n) - n[0]) * float(np.polyval(coef[::-1], 1.0 / sigma))

    def rows(self):
        """(k, n, value) for every stored entry, sorted by k then n."""
        return sorted(((k, n, v) for (k, n), v in self.coeffs.items()), key=lambda r: (r[0], sum(r[1]), r[1]))

    def shift_identity_residual(self):
        """Largest relative violation of
        qtilde_k(n + e_0) + sum_{j>=1} qtilde_{k-1}(n + e_j) = qtilde_k(n) over the table."""
        worst = 0.0
        for level in range(self.max_budget):
            for n in configs_at_level(level, self.d):
                for k in range(self.max_budget - level):
                    lhs = self.get(k, _shift(n, plus=0))
                    if k >= 1:
                        lhs += sum(self.get(k - 1, _shift(n, plus=j)) for j in range(1, self.d))
                    rhs = self.get(k, n)
                    scale = max(abs(rhs), abs(lhs), 1e-300)
                    worst = max(worst, abs(lhs - rhs) / scale if scale > 1e-12 else abs(lhs - rhs))
        return worst


def q0(n, m):
    """Leading coefficient prod_{i>=1} Gamma(theta P_0i + n_i) / Gamma(theta P_0i)."""
    n = as_config(n, m.d)
    imm = m.immigration
    return math.exp(math.fsum(log_gamma_ratio(imm[i], n[i]) for i in range(1, m.d)))


def _log_q0(n, imm):
    return math.fsum(log_gamma_ratio(imm[i], n[i]) for i in range(1, len(n)))


def gamma_approx(n, m, sigma):
    """Sampling probability under e_0 + Z/sigma with independent Gamma(theta P_0i, 1) unfit coordinates.

    Returns (value, gamma) with gamma_k the coefficient of sigma^-(|n| - n_0 + k).
    """
    n = as_config(n, m.d)
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    imm = m.immigration
    n_fit = n[0]
    gammas = np.zeros(n_fit + 1)
    for k in range(n_fit + 1):
        total = 0.0
        for parts in configs_at_level(k, m.d - 1):
            log_term = gammaln(n_fit + 1) - gammaln(n_fit - k + 1) - sum(gammaln(p + 1) for p in parts)
            log_term += math.fsum(log_gamma_ratio(imm[i], n[i] + parts[i - 1]) for i in range(1, m.d))
            total += math.exp(log_term)
        gammas[k] = (-1) ** k * total
    value = sigma ** -(sum(n) - n_fit) * float(np.polyval(gammas[::-1], 1.0 / sigma))
    return value, gammas


def expansion_general(m, h_max):
    """Expansion coefficients for a general mutation matrix by dynamic programming.

    Shells h = k + |n| are filled in increasing order.  Inside a shell the
    order k increases (so |n| decreases), because the general recursion and
    the unfit boundary both read qtilde_{k-1} one level up in the same shell.
    """
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    d, theta, P = m.d, m.theta, m.P
    imm = m.immigration
    table = ExpansionTable(h_max, d)
    g = table.get
    c = table.coeffs
    unfit = range(1, d)
    e = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]

    for h in range(1, h_max + 1):
        for k in range(h):
            level = h - k
            for n in configs_at_level(level, d):
                if level == 1:
                    i = n.index(1)
                    if i == 0:
                        val = 1.0 if k == 0 else -sum(g(k - 1, e[j]) for j in unfit)
                    elif k == 0:
                        val = imm[i]
                    else:
                        val = -theta * sum(((i == j) + P[0, i] - P[j, i]) * g(k - 1, e[j]) for j in unfit)
                        val += sum(g(k - 1, _shift(e[i], plus=j)) for j in unfit)
                elif n[0] == level:
                    down = _shift(n, minus=0)
                    val = g(k, down)
                    if k >= 1:
                        val -= theta * (1 - P[0, 0]) * g(k - 1, down)
                    if k >= 2:
                        two_down = _shift(down, minus=0)
                        val += sum((level - 2 + theta * P[j, 0]) * g(k - 2, _shift(two_down, plus=j))
                                   for j in unfit)
                else:
                    n_fit = n[0]
                    val = sum(n[i] * (n[i] - 1 + imm[i]) * g(k, _shift(n, minus=i)) for i in unfit if n[i])
                    if k >= 1:
                        val += (n_fit * (n_fit - 1 + theta * P[0, 0]) - level * (level - 1 + theta)) * g(k - 1, n)
                        val += sum(n[i] * theta * (P[j, i] - P[0, i]) * g(k - 1, _shift(n, minus=i, plus=j))
                                   for i in unfit if n[i] for j in unfit)
                        val += level * sum(g(k - 1, _shift(n, plus=i)) for i in unfit)
                    if k >= 2 and n_fit:
                        val += sum(n_fit * (n_fit - 1 + theta * P[j, 0]) * g(k - 2, _shift(n, minus=0, plus=j))
                                   for j in unfit)
                    val /= level - n_fit
                c[(k, n)] = val
    return table


def _pim_series(n, theta, Q, K):
    n_fit = n[0]
    u = sum(n) - n_fit
    out_rate = theta * (1 - Q[0])
    fit_rate = theta * Q[0]
    lead = math.exp(math.fsum(log_gamma_ratio(theta * Q[i], n[i]) for i in range(1, len(n))))
    r = [rising_factorial(u + out_rate, k) * rising_factorial(1 - fit_rate - n_fit, k) / math.factorial(k)
         for k in range(K + 1)]
    s = [rising_factorial(out_rate, k) * rising_factorial(1 - fit_rate, k) / math.factorial(k)
         for k in range(K + 1)]
    coef = []
    for k in range(K + 1):
        coef.append(lead * r[k] - sum(s[k - j] * coef[j] for j in range(k)))
    return coef


def expansion_pim(m, h_max):
    """Closed-form coefficients under parent-independent mutation."""
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    if not m.irreducible:
        raise ValueError("the PIM closed form needs all Q_i > 0")
    table = ExpansionTable(h_max, m.d)
    for level in range(1, h_max + 1):
        for n in configs_at_level(level, m.d):
            for k, v in enumerate(_pim_series(n, m.theta, m.Q, h_max - level)):
                table.coeffs[(k, n)] = v
    return table


def two_allele_asymptotic(n, m, K):
    """qtilde_0..qtilde_K for two alleles, as a vector."""
    if m.d != 2:
        raise ValueError("two_allele_asymptotic needs d = 2")
    n1, n2 = as_config(n, 2)
    tq1, tq2 = m.theta * m.Q[0], m.theta * m.Q[1]
    lead = math.exp(log_gamma_ratio(tq2, n2))
    r = [rising_factorial(n2 + tq2, k) * rising_factorial(1 - tq1 - n1, k) / math.factorial(k) for k in range(K + 1)]
    s = [rising_factorial(tq2, k) * rising_factorial(1 - tq1, k) / math.factorial(k) for k in range(K + 1)]
    coef = [lead]
    for k in range(1, K + 1):
        coef.append(lead * (r[k] - s[k]) - sum(s[k - j] * coef[j] for j in range(1, k)))
    return np.array(coef)


# --- exact two-allele value ---------------------------------------------------

def log_kummer_integral(a, b, z, epsrel=1e-13):
    """log of int_0^1 exp(z y) y^(a-1) (1-y)^(b-a-1) dy, for a > 0 and b > a.

    The exponential is shifted by max(z, 0) and the interval split at the
    edge of the boundary layer; both endpoint singularities are handled by
    algebraic-weight quadrature.
    """
    if not (a > 0 and b > a):
        raise ValueError("need a > 0 and b > a")
    shift = max(z, 0.0)
    width = 40.0 / abs(z) if z != 0 else 1.0
    cut = 0.5 if width >= 0.5 else (width if z < 0 else 1.0 - width)

    def left(y):
        return math.exp(z * y - shift) * (1.0 - y) ** (b - a - 1)

    def right(y):
        return math.exp(z * y - shift) * y ** (a - 1)

    opts = dict(weight="alg", epsabs=0.0, epsrel=epsrel, limit=400, full_output=1)
    lo, lo_err, *info_lo = integrate.quad(left, 0.0, cut, wvar=(a - 1, 0.0), **opts)
    hi, hi_err, *info_hi = integrate.quad(right, cut, 1.0, wvar=(0.0, b - a - 1), **opts)
    total = lo + hi
    err = lo_err + hi_err
    if not total > 0 or err > 1e-10 * total:
        raise QuadratureError(f"Kummer integral (a={a}, b={b}, z={z}) did not converge: "
                              f"value {total:.6e}, error {err:.2e}", (total, err))
    return math.log(total) + shift


def log_hyp1f1(a, b, z):
    return gammaln(b) - gammaln(a) - gammaln(b - a) + log_kummer_integral(a, b, z)


def two_allele_exact(n, m, sigma1, sigma2=0.0):
    """Exact two-allele PIM sampling probability through Kummer's function."""
    if m.d != 2:
        raise ValueError("two_allele_exact needs d = 2")
    n1, n2 = as_config(n, 2)
    tq1, tq2 = m.theta * m.Q[0], m.theta * m.Q[1]
    if not (tq1 > 0 and tq2 > 0):
        raise ValueError("two_allele_exact needs theta Q_1, theta Q_2 > 0")
    if n1 + n2 == 0:
        return 1.0
    theta = m.theta
    z = sigma2 - sigma1
    log_q = log_gamma_ratio(tq1, n1) + log_gamma_ratio(tq2, n2) - log_gamma_ratio(theta, n1 + n2)
    log_q += log_hyp1f1(n2 + tq2, n1 + n2 + theta, z) - log_hyp1f1(tq2, theta, z)
    return math.exp(log_q)


# --- finite-sigma oracles ----------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str
    error_estimate: float
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (-1e-12 <= self.value <= 1 + 1e-12) or not self.error_estimate >= 0:
            raise ValueError(f"invalid oracle output value={self.value}, error={self.error_estimate}")


def _jacobi_rule(n_nodes, a, b, lo, hi):
    """Nodes and weights on [lo, hi] for the weight (x - lo)^a (hi - x)^b."""
    t, w = roots_jacobi(n_nodes, b, a)
    half = 0.5 * (hi - lo)
    return lo + half * (1.0 + t), w * half ** (a + b + 1.0)


def _composite_rule(n_nodes, a, b, rate):
    """Rule on [0, 1] for x^a (1-x)^b e^(rate x): split at the boundary layer of the exponential."""
    width = 40.0 / abs(rate) if rate else 1.0
    cut = 0.5 if width >= 0.5 else (width if rate < 0 else 1.0 - width)
    xl, wl = _jacobi_rule(n_nodes, a, 0.0, 0.0, cut)
    wl = wl * (1.0 - xl) ** b
    xr, wr = _jacobi_rule(n_nodes, 0.0, b, cut, 1.0)
    wr = wr * xr**a
    return np.concatenate((xl, xr)), np.concatenate((wl, wr))


def _log_dirichlet_exp_integral(alpha, sigmas, n_nodes):
    """log of int over the simplex of prod_i exp(sigma_i x_i) x_i^(alpha_i - 1), d = 2 or 3."""
    d = len(alpha)
    shift = float(np.max(sigmas))
    if d == 2:
        x, w = _composite_rule(n_nodes, alpha[1] - 1, alpha[0] - 1, sigmas[1] - sigmas[0])
        f = np.exp(sigmas[0] * (1 - x) + sigmas[1] * x - shift)
        return math.log(np.dot(w, f)) + shift
    # x0 = 1 - s, x1 = s w, x2 = s (1 - w); Jacobian s
    rate_s = max(sigmas[1], sigmas[2]) - sigmas[0]
    s, ws = _composite_rule(n_nodes, alpha[1] + alpha[2] - 1, alpha[0] - 1, rate_s)
    v, wv = _composite_rule(n_nodes, alpha[1] - 1, alpha[2] - 1, sigmas[1] - sigmas[2])
    S, V = np.meshgrid(s, v, indexing="ij")
    f = np.exp(sigmas[0] * (1 - S) + S * (sigmas[1] * V + sigmas[2] * (1 - V)) - shift)
    return math.log(ws @ f @ wv) + shift


def pim_quadrature_oracle(n, m, sigmas, tol=1e-10, max_nodes=256):
    """q(n) as a ratio of weighted-Dirichlet integrals, d = 2 or 3.

    Composite Gauss-Jacobi rules absorb the endpoint singularities; the node
    count doubles until successive ratios agree to ``tol``.
    """
    if m.d not in (2, 3):
        raise ValueError("the quadrature oracle covers d = 2 and d = 3")
    if not m.irreducible:
        raise ValueError("the quadrature oracle needs all Q_i > 0")
    n = as_config(n, m.d)
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.size != m.d:
        raise ValueError("one selection parameter per allele is needed")
    if not any(n):
        return OracleResult(1.0, "pim-quadrature", 0.0, {"nodes": 0})
    base = m.theta * m.Q
    prev = None
    n_nodes = 16
    while n_nodes <= max_nodes:
        log_q = (_log_dirichlet_exp_integral(base + np.array(n), sigmas, n_nodes)
                 - _log_dirichlet_exp_integral(base, sigmas, n_nodes))
        if prev is not None and abs(log_q - prev) <= tol:
            value = math.exp(log_q)
            err = max(abs(log_q - prev), 1e-12) * value
            return OracleResult(value, "pim-quadrature", err, {"nodes": n_nodes})
        prev = log_q
        n_nodes *= 2
    raise QuadratureError(f"quadrature for n={n} did not settle by {max_nodes} nodes",
                          (math.exp(prev), math.exp(log_q)))


def _solve_truncated(m, sigma, level_cap):
    """Scaled solution y(n) = sigma^(|n| - n_0) q(n) on 1 <= |n| <= level_cap.

    Working with y keeps tiny probabilities with many unfit copies at full
    relative precision; each unknown is further divided by a gamma-ratio
    weight close to its leading-order value, since y grows factorially in the
    unfit counts. Selection out of the top level is closed with the
    leading-order ratio q(n + e_i) ~ (a_i + n_i) q(n) / sigma, which keeps
    the system homogeneous. The system is nearly singular with the solution as
    its null direction, so one equation is swapped for the normalisation
    sum_i q(e_i) = 1: the one where the left null vector is largest, which
    leaves a well-conditioned sparse system.
    """
    d, theta, P = m.d, m.theta, m.P
    imm = m.immigration
    levels = [list(configs_at_level(level, d)) for level in range(level_cap + 1)]
    offset = {}
    size = 0
    for level in range(1, level_cap + 1):
        for n in levels[level]:
            offset[n] = size
            size += 1

    def unfit_count(n):
        return sum(n) - n[0]

    # zero immigration rates still get a weight with the right factorial growth
    weight_rates = [a if a > 0 else 1.0 for a in imm]
    log_weight = {n: _log_q0(n, weight_rates) for n in offset}

    rows, cols, vals = [], [], []
    for n, r in offset.items():
        level, u = sum(n), unfit_count(n)
        diag = level * (level - 1 + theta) + u * sigma

        def add(target, coef):
            if min(target) < 0 or coef == 0 or not any(target):
                return
            rows.append(r)
            cols.append(offset[target])
            vals.append(coef * sigma ** (u - unfit_count(target)) * math.exp(log_weight[target] - log_weight[n]))

        for i in range(d):
            if n[i]:
                add(_shift(n, minus=i), -n[i] * (n[i] - 1))
                for j in range(d):
                    add(_shift(n, minus=i, plus=j), -n[i] * theta * P[j, i])
        for i in range(1, d):
            if level < level_cap:
                add(_shift(n, plus=i), -level * sigma)
            else:
                diag -= level * (imm[i] + n[i])
        rows.append(r)
        cols.append(r)
        vals.append(diag)
    A = csr_matrix((vals, (rows, cols)), shape=(size, size))

    # one transposed solve gives the left null direction of A
    left = splu(csc_matrix(A.T)).solve(np.ones(size))
    swap = int(np.argmax(np.abs(left)))
    A = A.tolil()
    A[swap, :] = 0.0
    for n in levels[1]:
        A[swap, offset[n]] = math.exp(log_weight[n]) * sigma ** -unfit_count(n)
    rhs = np.zeros(size)
    rhs[swap] = 1.0
    z = splu(csc_matrix(A)).solve(rhs)
    if not np.all(np.isfinite(z)):
        raise np.linalg.LinAlgError("truncated recursion system is singular")
    return {n: (float(z[r] * math.exp(log_weight[n])), unfit_count(n)) for n, r in offset.items()}


def truncated_system_oracle(m, sigma, level_cap):
    """Solve the sampling recursion on 1 <= |n| <= level_cap.

    The coupling to level_cap + 1 is closed with the leading asymptotic term;
    the error estimate is the change in each value when level_cap grows by 2.
    """
    return _truncated_pair(m, sigma, level_cap)[0]


def _truncated_pair(m, sigma, level_cap):
    if not isinstance(m, MutationModel):
        m = m.to_mutation_model()
    m.require_irreducible()
    if level_cap < 1:
        raise ValueError("level_cap must be >= 1")
    coarse = _solve_truncated(m, sigma, level_cap)
    fine = _solve_truncated(m, sigma, level_cap + 2)
    settings = {"level_cap": level_cap, "sigma": sigma}
    zero = tuple([0] * m.d)
    out = {zero: OracleResult(1.0, "truncated-linear-system", 0.0, settings)}
    log_values = {zero: 0.0}
    rel_err = {zero: 0.0}
    for n, (y, u) in coarse.items():
        scale = sigma ** -u
        out[n] = OracleResult(min(max(y * scale, 0.0), 1.0), "truncated-linear-system",
                              abs(y - fine[n][0]) * scale, settings)
        log_values[n] = math.log(y) - u * math.log(sigma) if y > 0 else -math.inf
        rel_err[n] = abs(y - fine[n][0]) / abs(y) if y else math.inf
    return out, log_values, rel_err


class SamplingProbabilities:
    """q(n) looked up from an oracle solution, kept in log space for ratios."""

    def __init__(self, log_values, rel_errors=None):
        self.log_values = dict(log_values)
        self.rel_errors = dict(rel_errors or {})

    def log(self, n):
        n = tuple(int(v) for v in n)
        if min(n) < 0:
            return -math.inf
        try:
            return self.log_values[n]
        except KeyError:
            raise KeyError(f"no sampling probability available for {n}") from None

    def __call__(self, n):
        return math.exp(self.log(n))

    def relative_error(self, n):
        n = tuple(int(v) for v in n)
        if min(n) < 0:
            return 0.0
        return self.rel_errors.get(n, 0.0)

    @classmethod
    def from_results(cls, results):
        logs = {n: (math.log(r.value) if r.value > 0 else -math.inf) for n, r in results.items()}
        rel = {n: (r.error_estimate / r.value if r.value > 0 else math.inf) for n, r in results.items()}
        return cls(logs, rel)

    @classmethod
    def from_truncated_system(cls, m, sigma, level_cap):
        _, logs, rel = _truncated_pair(m, sigma, level_cap)
        return cls(logs, rel)


def default_burn_in(theta):
    return 20.0 / min(1.0, theta) if theta > 0 else 20.0


def mc_oracle_panel(m, sigma, configs, replicates=2000, sample_time=2.0, burn_in=None,
                    dt_scaled=0.01, seed=0, max_doublings=4):
    """Ergodic averages of prod_i X_i^n_i for several configurations from one ensemble.

    ``replicates`` independent chains start near e_0, are burned in, and then
    time-averaged over ``sample_time``.  Chains act as batches for the
    standard error.  Burn-in doubles while the mean of X_0 over the last
    quarter of burn-in drifts from the sampling-window mean by more than one
    standard error.
    """
    from .diffusion import wf_ensemble

    if not isinstance(m, MutationModel):
        m = m.to_mutation_model()
    m.require_irreducible()
    configs = [as_config(n, m.d) for n in configs]
    d = m.d
    rng = np.random.default_rng(seed)
    sigmas = np.zeros(d)
    sigmas[0] = sigma
    dt = dt_scaled / sigma
    x = np.zeros((replicates, d))
    x[:, 1:] = rng.gamma(np.maximum(m.immigration[1:], 1e-3), size=(replicates, d - 1)) / sigma
    x[:, 0] = 0.0
    x[:, 0] = 1.0 - x.sum(axis=1)
    x = np.clip(x, 0.0, None)
    x /= x.sum(axis=1, keepdims=True)
    powers = np.array(configs, dtype=float)

    burn = default_burn_in(m.theta) if burn_in is None else burn_in
    n_burn = int(math.ceil(burn / dt))
    n_sample = int(math.ceil(sample_time / dt))

    def window_mean(n_steps):
        acc = np.zeros((replicates, len(configs) + 1))

        def observe(step, cur):
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.log(cur)
                acc[:, :-1] += np.exp(np.where(powers > 0, logs[:, None, :] * powers[None], 0.0).sum(axis=2))
            acc[:, -1] += cur[:, 0]

        wf_ensemble(m, sigmas, x, dt, n_steps, rng, observe)
        return acc / n_steps

    quarter = max(1, n_burn // 4)
    wf_ensemble(m, sigmas, x, dt, n_burn - quarter, rng)
    tail = window_mean(quarter)
    total_burn = n_burn
    for _ in range(max_doublings + 1):
        chain_means = window_mean(n_sample)
        drift = abs(tail[:, -1].mean() - chain_means[:, -1].mean())
        se0 = chain_means[:, -1].std(ddof=1) / math.sqrt(replicates)
        if drift < se0:
            break
        tail = window_mean(total_burn)
        total_burn *= 2
    settings = {"sigma": sigma, "replicates": replicates, "burn_in": total_burn * dt,
                "sample_time": sample_time, "dt": dt, "seed": seed}
    out = []
    for c, n in enumerate(configs):
        if not any(n):
            out.append(OracleResult(1.0, "monte-carlo", 0.0, settings))
            continue
        col = chain_means[:, c]
        out.append(OracleResult(float(col.mean()), "monte-carlo",
                                float(col.std(ddof=1) / math.sqrt(replicates)), settings))
    return out


def mc_oracle(m, sigma, n, replicates=2000, sample_time=2.0, burn_in=None, dt_scaled=0.01, seed=0):
    return mc_oracle_panel(m, sigma, [n], replicates, sample_time, burn_in, dt_scaled, seed)[0]
