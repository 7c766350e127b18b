"""Discrete Wright-Fisher model and its scaling regimes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import cir_mean, cir_variance, logistic_trajectory


@dataclass(frozen=True, eq=False)
class DiscreteWfParams:
    """Population size N, per-generation mutation matrix u and selection coefficients s.

    ``alpha`` (generations per unit time) and ``a_N`` (space scaling) are carried
    along when the parameters come from a scaling family.
    """

    N: int
    u: np.ndarray
    s: np.ndarray
    alpha: float = None
    a_N: float = None
    eps: float = None
    eps_sel: tuple = field(default=None)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        s = np.array(self.s, dtype=float)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if u.ndim != 2 or u.shape[0] != u.shape[1] or s.shape != (u.shape[0],):
            raise ValueError("u must be d x d and s a d-vector")
        if np.any(u < 0) or np.any(np.abs(u.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("rows of u must be probability vectors")
        if np.any(1.0 + s <= 0):
            raise ValueError("need 1 + s_i > 0")
        u.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "s", s)

    @property
    def d(self):
        return self.s.size

    @classmethod
    def from_scaling(cls, m, sigmas, N, eps, eps_sel, alpha=None, a_N=None):
        """u_ij = eps (theta/2) P_ij off the diagonal, s_i = eps_i sigma_i / 2."""
        d = m.d
        eps_sel = np.broadcast_to(np.asarray(eps_sel, dtype=float), (d,))
        u = eps * 0.5 * m.theta * m.P
        np.fill_diagonal(u, 0.0)
        u[np.diag_indices(d)] = 1.0 - u.sum(axis=1)
        s = eps_sel * 0.5 * np.asarray(sigmas, dtype=float)
        return cls(N, u, s, alpha, a_N, eps, tuple(eps_sel))


def offspring_law(x, p):
    """q(x): parent chosen by fitness-weighted frequency, then mutated by u."""
    x = np.asarray(x, dtype=float)
    weighted = x * (1.0 + p.s)
    weighted = weighted / weighted.sum(axis=-1, keepdims=True)
    return weighted @ p.u


def wf_step(x, p, rng):
    """One generation: N X' ~ Multinomial(N, q(x)). Accepts one state or a batch of rows."""
    q = offspring_law(x, p)
    q = np.clip(q, 0.0, None)
    q = q / q.sum(axis=-1, keepdims=True)
    return rng.multinomial(p.N, q) / p.N


def increment_moments(x, p, alpha_N):
    """Exact alpha E[dX] and alpha E[dX_i dX_j] for one generation from x."""
    x = np.asarray(x, dtype=float)
    q = offspring_law(x, p)
    shift = q - x
    drift = alpha_N * shift
    second = alpha_N * ((np.diag(q) - np.outer(q, q)) / p.N + np.outer(shift, shift))
    return drift, second


def drift_limit(x, m, sigmas, case):
    """Infinitesimal-mean limits: "i" all forces on one scale, "ii" fit-allele selection dominates."""
    x = np.asarray(x, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if case == "i":
        return 0.5 * m.theta * (x @ m.P - x) + 0.5 * x * (sigmas - x @ sigmas)
    if case == "ii":
        e0 = np.zeros_like(x)
        e0[0] = 1.0
        return 0.5 * sigmas[0] * x[0] * (e0 - x)
    raise ValueError(f"unknown drift case {case!r}")


def covariance_limit(x, case):
    """Infinitesimal-covariance limits: "a" deterministic (zero), "d" Wright-Fisher diffusion."""
    x = np.asarray(x, dtype=float)
    if case == "a":
        return np.zeros((x.size, x.size))
    if case == "d":
        return np.diag(x) - np.outer(x, x)
    raise ValueError(f"unknown covariance case {case!r}")


def scaling_params(m, sigmas, N, case, beta=0.5):
    """Parameters for a named scaling regime.

    "d,i": eps = eps_i = 1/N, alpha = N.
    "a,ii": eps = 1/N, eps_0 = N^-beta, other eps_i = 0, alpha = N^beta, a_N = N eps_0.
    "a,i": eps = eps_i = N^-beta, alpha = N^beta, a_N = sqrt(N eps).
    """
    d = m.d
    if case == "d,i":
        return DiscreteWfParams.from_scaling(m, sigmas, N, 1.0 / N, 1.0 / N, alpha=float(N))
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    eps_fast = N ** -beta
    if case == "a,ii":
        eps_sel = np.zeros(d)
        eps_sel[0] = eps_fast
        return DiscreteWfParams.from_scaling(m, sigmas, N, 1.0 / N, eps_sel, alpha=1.0 / eps_fast,
                                             a_N=N * eps_fast)
    if case == "a,i":
        return DiscreteWfParams.from_scaling(m, sigmas, N, eps_fast, eps_fast, alpha=1.0 / eps_fast,
                                             a_N=math.sqrt(N * eps_fast))
    raise ValueError(f"unknown scaling case {case!r}")


@dataclass(frozen=True)
class ScalingConvergence:
    case: str
    N_list: tuple
    drift_errors: tuple
    covariance_errors: tuple
    drift_slope: float
    covariance_slope: float


def _slope(N_list, errors):
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        return -math.inf
    return float(np.polyfit(np.log(N_list), np.log(errors), 1)[0])


def increment_limit_convergence(m, sigmas, x, case, N_list, beta=0.5):
    """Max-norm gap between exact increment moments and their limits, with log-log slope in N.

    Case "d,i" compares with drift (i) and covariance (d); case "a,ii" with
    drift (ii) and covariance (a).
    """
    drift_case, cov_case = {"d,i": ("i", "d"), "a,ii": ("ii", "a")}[case]
    d_err, c_err = [], []
    for N in N_list:
        p = scaling_params(m, sigmas, N, case, beta)
        drift, second = increment_moments(x, p, p.alpha)
        d_err.append(float(np.max(np.abs(drift - drift_limit(x, m, sigmas, drift_case)))))
        c_err.append(float(np.max(np.abs(second - covariance_limit(x, cov_case)))))
    return ScalingConvergence(case, tuple(N_list), tuple(d_err), tuple(c_err),
                              _slope(N_list, d_err), _slope(N_list, c_err))


def pim_decay(chi0, Q, theta, t):
    """Neutral PIM deterministic limit chi_i(t) = Q_i + (chi_i(0) - Q_i) e^{-theta t / 2}."""
    Q = np.asarray(Q, dtype=float)
    return Q + (np.asarray(chi0, dtype=float) - Q) * math.exp(-0.5 * theta * t)


def _grid_point(x, N):
    """Nearest point of the N-grid of the simplex (largest-remainder rounding)."""
    x = np.asarray(x, dtype=float)
    counts = np.floor(x * N).astype(np.int64)
    short = N - counts.sum()
    order = np.argsort(-(x * N - counts), kind="stable")
    counts[order[:short]] += 1
    return counts / N


def run_generations(x0, p, generations, replicates, rng):
    x = np.tile(_grid_point(x0, p.N), (replicates, 1))
    for _ in range(generations):
        x = wf_step(x, p, rng)
    return x


def deterministic_limit_error(m, sigmas, x0, case, N, t, replicates, seed, beta=0.5):
    """Max deviation of the mean of X(floor(alpha t)) from the deterministic limit.

    Case "a,i" uses the neutral PIM decay (needs sigma = 0 and constant-row P);
    case "a,ii" the logistic trajectory.
    """
    p = scaling_params(m, sigmas, N, case, beta)
    rng = np.random.default_rng(seed)
    start = _grid_point(x0, N)
    x = run_generations(start, p, int(math.floor(p.alpha * t)), replicates, rng)
    if case == "a,i":
        Q = m.pim_weights()
        if Q is None or np.any(np.asarray(sigmas) != 0):
            raise ValueError("the closed-form decay needs a neutral PIM model")
        target = pim_decay(start, Q, m.theta, t)
    elif case == "a,ii":
        target = logistic_trajectory(start, t)
    else:
        raise ValueError("deterministic limits exist for cases 'a,i' and 'a,ii'")
    return float(np.max(np.abs(x.mean(axis=0) - target)))


@dataclass(frozen=True)
class FluctuationRow:
    N: int
    component: int
    mean: float
    mean_se: float
    mean_target: float
    var: float
    var_se: float
    var_target: float

    @property
    def mean_gap(self):
        return self.mean - self.mean_target

    @property
    def var_gap(self):
        return self.var - self.var_target


def _var_se(values):
    n = values.size
    centred = values - values.mean()
    return float(np.sqrt(max(np.mean(centred**4) - np.mean(centred**2) ** 2, 0.0) / n))


def boundary_fluctuation_experiment(m, z0_unfit, t, N_list, replicates, seed, beta=0.5):
    """Rows of Z = N eps_0 (X(floor(alpha t)) - e_0) moments against the CIR conditional moments.

    Uses case (a,ii) with sigma_0 = 1: eps = 1/N, eps_0 = N^-beta, alpha = 1/eps_0.
    Each N gets its own child stream of ``seed``.
    """
    z0_unfit = np.asarray(z0_unfit, dtype=float)
    sigmas = np.zeros(m.d)
    sigmas[0] = 1.0
    imm = m.immigration
    rows = []
    for N, ss in zip(N_list, np.random.SeedSequence(seed).spawn(len(N_list))):
        p = scaling_params(m, sigmas, N, "a,ii", beta)
        x0 = np.concatenate([[1.0 - z0_unfit.sum() / p.a_N], z0_unfit / p.a_N])
        start = _grid_point(x0, N)
        start_z = p.a_N * start[1:]
        x = run_generations(start, p, int(math.floor(p.alpha * t)), replicates, np.random.default_rng(ss))
        z = p.a_N * x[:, 1:]
        for i in range(m.d - 1):
            col = z[:, i]
            rows.append(FluctuationRow(int(N), i + 1, float(col.mean()), float(col.std(ddof=1) / math.sqrt(col.size)),
                                       cir_mean(start_z[i], imm[i + 1], t), float(col.var(ddof=1)), _var_se(col),
                                       cir_variance(start_z[i], imm[i + 1], t)))
    return rows


def monotone_approach(rows, n_se=3.0):
    """Per component and moment: gaps shrink along the N list up to noise, and the last is within n_se."""
    verdicts = {}
    by_comp = {}
    for r in rows:
        by_comp.setdefault(r.component, []).append(r)
    for comp, rs in by_comp.items():
        rs = sorted(rs, key=lambda r: r.N)
        for name, gap, se in (("mean", "mean_gap", "mean_se"), ("var", "var_gap", "var_se")):
            gaps = [abs(getattr(r, gap)) for r in rs]
            ses = [getattr(r, se) for r in rs]
            shrinking = all(gaps[k + 1] <= gaps[k] + n_se * math.hypot(ses[k], ses[k + 1])
                            for k in range(len(gaps) - 1))
            verdicts[(comp, name)] = shrinking and gaps[-1] <= n_se * ses[-1]
    return verdicts


def interior_fluctuation_experiment(m, t, N, replicates, seed, beta=0.5):
    """Neutral PIM case (a,i) with a_N = sqrt(N eps), started at the equilibrium Q.

    Returns (empirical covariance of Z(t), its elementwise SE, OU covariance
    (Sigma / theta)(1 - e^{-theta t})).
    """
    Q = m.pim_weights()
    if Q is None:
        raise ValueError("interior contrast needs a PIM model")
    sigmas = np.zeros(m.d)
    p = scaling_params(m, sigmas, N, "a,i", beta)
    rng = np.random.default_rng(seed)
    start = _grid_point(Q, N)
    x = run_generations(start, p, int(math.floor(p.alpha * t)), replicates, rng)
    z = p.a_N * (x - Q)
    centred = z - z.mean(axis=0)
    cov = centred.T @ centred / (replicates - 1)
    prods = centred[:, :, None] * centred[:, None, :]
    se = prods.std(axis=0, ddof=1) / math.sqrt(replicates)
    sigma_matrix = np.diag(Q) - np.outer(Q, Q)
    target = sigma_matrix / m.theta * (1.0 - math.exp(-m.theta * t))
    return cov, se, target


@dataclass(frozen=True)
class AnomalousScalingRow:
    N: int
    var_linear: float
    var_sqrt: float

    @property
    def ratio(self):
        return self.var_sqrt / self.var_linear


def anomalous_scaling_signature(m, z0_unfit, t, N_list, replicates, seed, beta=0.5):
    """Case (a,ii) variance of the first unfit coordinate under a_N = N eps_0 and a_N = sqrt(N eps_0).

    The two differ by the factor N eps_0, so only the first stays of order one.
    """
    rows = boundary_fluctuation_experiment(m, z0_unfit, t, N_list, replicates, seed, beta)
    out = []
    for r in rows:
        if r.component != 1:
            continue
        a_lin = r.N * r.N ** -beta
        out.append(AnomalousScalingRow(r.N, r.var, r.var / a_lin))
    return out
