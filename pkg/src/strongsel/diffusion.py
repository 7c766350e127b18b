"""Wright-Fisher diffusion simulation and its three strong-selection limits.

Allele 0 is the fit allele.  On the CBI scale the fluctuation of unfit allele i
is Z_i = sigma * X_i, observed at diffusion time t / sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TOLERANCES, MutationModel, SelectionRegime, as_simplex_point


@dataclass(frozen=True, eq=False)
class CbiState:
    z: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("CBI state needs at least two coordinates")
        if np.any(z[1:] < 0):
            raise ValueError("unfit CBI coordinates must be >= 0")
        z[0] = -z[1:].sum()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_unfit(cls, unfit, time=0.0):
        return cls(np.concatenate(([0.0], np.asarray(unfit, dtype=float))), time)


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    t: float
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True, eq=False)
class DiffusionPath:
    times: np.ndarray
    states: np.ndarray
    seed: object


class RichardsonCheckError(RuntimeError):
    pass


# --- forward diffusion -------------------------------------------------------

def wf_drift(x, m, sigmas):
    """Mutation plus selection drift at x, with x of shape (..., d)."""
    x = np.asarray(x, dtype=float)
    mut = 0.5 * m.theta * (x @ m.P - x)
    mean_fitness = x @ sigmas
    sel = 0.5 * x * (sigmas - mean_fitness[..., None])
    return mut + sel


def wf_diffusion_matrix(x):
    x = np.asarray(x, dtype=float)
    return np.diag(x) - np.outer(x, x)


def symmetric_sqrt(D):
    """Symmetric PSD square root with negative eigenvalues clamped at zero."""
    vals, vecs = np.linalg.eigh(D)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def wf_noise(x, dW):
    """B(x) dW with B_ij = sqrt(x_i) delta_ij - x_i sqrt(x_j), so B B^T = diag(x) - x x^T."""
    root = np.sqrt(x)
    return root * dW - x * np.sum(root * dW, axis=-1, keepdims=True)


def _project(x):
    np.clip(x, 0.0, None, out=x)
    x /= x.sum(axis=-1, keepdims=True)
    return x


def _check_dt(dt, sigmas):
    if not dt > 0:
        raise ValueError("dt must be positive")
    scale = max(1.0, float(np.max(np.abs(sigmas))))
    if dt >= 0.1 / scale:
        raise ValueError(f"dt = {dt} violates the stability guard dt < 0.1/sigma = {0.1 / scale}")


def wf_ensemble(m, sigmas, x, dt, n_steps, rng, observe=None):
    """Advance an ensemble of paths x (shape (R, d)) in place by n_steps Euler steps.

    ``observe(step, x)`` is called after every step.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    _check_dt(dt, sigmas)
    sqdt = math.sqrt(dt)
    for step in range(n_steps):
        dW = rng.standard_normal(x.shape) * sqdt
        x += wf_drift(x, m, sigmas) * dt + wf_noise(x, dW)
        _project(x)
        if observe is not None:
            observe(step, x)
    return x


def wf_simulate(m, s, x0, horizon, dt, seed):
    """One Euler-Maruyama path of the WF diffusion, projected back onto the simplex."""
    sigmas = s.vector(m.d)
    _check_dt(dt, sigmas)
    x = as_simplex_point(x0, m.d)[None, :].copy()
    n_steps = int(math.ceil(horizon / dt - 1e-12))
    states = np.empty((n_steps + 1, m.d))
    states[0] = x[0]

    def record(step, cur):
        states[step + 1] = cur[0]

    wf_ensemble(m, sigmas, x, dt, n_steps, np.random.default_rng(seed), record)
    times = np.minimum(np.arange(n_steps + 1) * dt, horizon)
    return DiffusionPath(times, states, seed)


# --- deterministic limits ----------------------------------------------------

def logistic_trajectory(xi0, t):
    xi0 = as_simplex_point(xi0)
    grow = np.ones_like(xi0)
    grow[0] = math.exp(0.5 * t)
    return xi0 * grow / (xi0[0] * grow[0] + 1.0 - xi0[0])


def logistic_velocity(xi):
    """omega(xi) = (xi_0 / 2)(e_0 - xi)."""
    xi = np.asarray(xi, dtype=float)
    e0 = np.zeros_like(xi)
    e0[0] = 1.0
    return 0.5 * xi[0] * (e0 - xi)


def logistic_jacobian(xi):
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    J = -0.5 * xi[0] * np.eye(d)
    J[:, 0] -= 0.5 * xi
    J[0, 0] += 0.5
    return J


def _moment_rhs(xi, mean, cov):
    J = logistic_jacobian(xi)
    return J @ mean, wf_diffusion_matrix(xi) + J @ cov + cov @ J.T


def _rk4(xi0, mean, cov, t_grid):
    out_m = [mean]
    out_c = [cov]
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        h = t1 - t0
        tm = t0 + 0.5 * h
        xa, xm, xb = (logistic_trajectory(xi0, tt) for tt in (t0, tm, t1))
        k1 = _moment_rhs(xa, mean, cov)
        k2 = _moment_rhs(xm, mean + 0.5 * h * k1[0], cov + 0.5 * h * k1[1])
        k3 = _moment_rhs(xm, mean + 0.5 * h * k2[0], cov + 0.5 * h * k2[1])
        k4 = _moment_rhs(xb, mean + h * k3[0], cov + h * k3[1])
        mean = mean + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        cov = cov + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        cov = 0.5 * (cov + cov.T)
        out_m.append(mean)
        out_c.append(cov)
    return out_m, out_c


def gaussian_moments_solve(xi0, mean0, cov0, horizon, dt, tol=1e-6):
    """Mean and covariance of the Gaussian fluctuation limit around the logistic path.

    Fixed-step RK4 on the grid of step dt, checked against a run with step dt/2.
    Returns one GaussianMoments per grid time.
    """
    if not dt > 0 or horizon < 0:
        raise ValueError("need dt > 0 and horizon >= 0")
    xi0 = as_simplex_point(xi0)
    mean0 = np.asarray(mean0, dtype=float)
    cov0 = np.asarray(cov0, dtype=float)
    n_steps = max(1, int(math.ceil(horizon / dt - 1e-12)))
    grid = np.linspace(0.0, horizon, n_steps + 1)
    coarse_m, coarse_c = _rk4(xi0, mean0, cov0, grid)
    fine_m, fine_c = _rk4(xi0, mean0, cov0, np.linspace(0.0, horizon, 2 * n_steps + 1))
    gap = max(
        max(np.max(np.abs(a - b)) for a, b in zip(coarse_m, fine_m[::2])),
        max(np.max(np.abs(a - b)) for a, b in zip(coarse_c, fine_c[::2])),
    )
    if gap > tol:
        raise RichardsonCheckError(f"step-halving disagreement {gap:.3e} exceeds {tol:.1e}; reduce dt")
    return [GaussianMoments(float(t), mu, c) for t, mu, c in zip(grid, fine_m[::2], fine_c[::2])]


# --- CBI / CIR ---------------------------------------------------------------

def cir_mean(z, a, t):
    decay = math.exp(-0.5 * t)
    return a * (1.0 - decay) + z * decay


def cir_variance(z, a, t):
    if t == 0:
        return 0.0
    decay = math.exp(-0.5 * t)
    scale = 0.5 * (1.0 - decay)
    noncentrality = 2.0 * decay * z / (1.0 - decay)
    return scale**2 * (4.0 * a + 4.0 * noncentrality)


def cir_transition_sample(z, a, t, seed=None, size=None):
    """Exact draw of Z(t) given Z(0) = z for dZ = (a - Z)/2 dt + sqrt(Z) dW.

    Scaled non-central chi-squared with 2a degrees of freedom, drawn as a
    Poisson mixture of Gamma variables.  With a = 0 the J = 0 branch is the
    atom at zero.
    """
    if np.any(np.asarray(z) < 0) or a < 0 or not t > 0:
        raise ValueError("need z >= 0, a >= 0 and t > 0")
    rng = np.random.default_rng(seed)
    decay = math.exp(-0.5 * t)
    scale = 0.5 * (1.0 - decay)
    noncentrality = 2.0 * decay * np.asarray(z, dtype=float) / (1.0 - decay)
    J = rng.poisson(0.5 * noncentrality, size=size)
    return scale * rng.gamma(a + J, 2.0)


def cbi_sample(m, z0, t, size, rng):
    """size independent draws of the unfit CBI coordinates at time t (shape (size, d-1))."""
    unfit = np.asarray(z0.z[1:] if isinstance(z0, CbiState) else z0, dtype=float)
    imm = m.immigration[1:]
    out = np.empty((size, unfit.size))
    for i in range(unfit.size):
        out[:, i] = cir_transition_sample(unfit[i], imm[i], t, rng, size=size)
    return out


def cbi_simulate(m, z0, times, seed):
    """CBI states at the requested times (each after z0.time), advanced by exact transitions."""
    rng = np.random.default_rng(seed)
    imm = m.immigration[1:]
    state = z0
    out = []
    for t in times:
        gap = t - state.time
        if gap < 0:
            raise ValueError("times must be non-decreasing and not before z0.time")
        if gap == 0:
            state = CbiState(state.z, t)
        else:
            unfit = [float(cir_transition_sample(zi, ai, gap, rng)) for zi, ai in zip(state.z[1:], imm)]
            state = CbiState.from_unfit(unfit, t)
        out.append(state)
    return out


# --- fluctuation comparisons -------------------------------------------------

@dataclass(frozen=True)
class MomentComparison:
    name: str
    observed: float
    expected: float
    se: float

    @property
    def z_score(self):
        diff = self.observed - self.expected
        if self.se == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.se

    def within(self, n_se):
        return abs(self.z_score) <= n_se


def _moment_rows(name, obs, ref=None, exact=None):
    """Compare first and second moments of obs with a reference sample or exact values."""
    rows = []
    for power in (1, 2):
        o = obs**power
        se = o.std(ddof=1) / math.sqrt(o.size)
        if ref is not None:
            r = ref**power
            rows.append(MomentComparison(f"{name}^{power} vs cbi sample", o.mean(), r.mean(),
                                         math.hypot(se, r.std(ddof=1) / math.sqrt(r.size))))
        if exact is not None:
            rows.append(MomentComparison(f"{name}^{power} vs exact", o.mean(), exact[power - 1], se))
    return rows


def scaled_fluctuation_compare(m, sigma, horizon, replicates, seed, z0=None, dt_scaled=0.005,
                               xi0=None):
    """Moments of sigma * X_i(t / sigma) (unfit i) against the CBI limit at CBI time ``horizon``.

    Compares against an independent exact CBI sample and against the exact CIR
    moments, per unfit component and for the total unfit mass sigma(1 - X_0).
    ``sigma = inf`` swaps the diffusion for a second CBI draw from the same
    stream, a harness self-check.  When ``xi0`` is given the Gaussian branch is
    added: covariance of sqrt(sigma)(X(t/sigma) - xi(t)) against the moment ODE.
    """
    d = m.d
    z0 = np.zeros(d - 1) if z0 is None else np.asarray(z0, dtype=float)
    seq = np.random.SeedSequence(seed)
    s_wf, s_cbi, s_gauss = (np.random.default_rng(s) for s in seq.spawn(3))
    if math.isinf(sigma):
        cbi_seq = np.random.SeedSequence(seed).spawn(3)[1]
        scaled = cbi_sample(m, z0, horizon, replicates, np.random.default_rng(cbi_seq))
    else:
        if sigma < 50:
            raise ValueError("the scaled comparison is meant for sigma >= 50")
        x = np.zeros((replicates, d))
        x[:, 1:] = z0 / sigma
        x[:, 0] = 1.0 - x[:, 1:].sum(axis=1)
        dt = dt_scaled / sigma
        n_steps = int(round(horizon / dt_scaled))
        wf_ensemble(m, SelectionRegime(sigma).vector(d), x, dt, n_steps, s_wf)
        scaled = sigma * x[:, 1:]
    ref = cbi_sample(m, z0, horizon, replicates, s_cbi)
    imm = m.immigration[1:]
    rows = []
    means = [cir_mean(z0[i], imm[i], horizon) for i in range(d - 1)]
    vars_ = [cir_variance(z0[i], imm[i], horizon) for i in range(d - 1)]
    for i in range(d - 1):
        exact = (means[i], vars_[i] + means[i] ** 2)
        rows += _moment_rows(f"Z{i + 1}", scaled[:, i], ref[:, i], exact)
    total_mean = sum(means)
    exact_total = (total_mean, sum(vars_) + total_mean**2)
    rows += _moment_rows("sigma(1-X0)", scaled.sum(axis=1), ref.sum(axis=1), exact_total)
    report = {"sigma": sigma, "horizon": horizon, "replicates": replicates, "cbi": rows}
    if xi0 is not None and not math.isinf(sigma):
        report["gaussian"] = _gaussian_branch(m, sigma, xi0, horizon, replicates, s_gauss, dt_scaled)
    return report


def _gaussian_branch(m, sigma, xi0, horizon, replicates, rng, dt_scaled):
    xi0 = as_simplex_point(xi0, m.d)
    d = m.d
    x = np.tile(xi0, (replicates, 1))
    dt = dt_scaled / sigma
    n_steps = int(round(horizon / dt_scaled))
    wf_ensemble(m, SelectionRegime(sigma).vector(d), x, dt, n_steps, rng)
    fluct = math.sqrt(sigma) * (x - logistic_trajectory(xi0, horizon))
    moments = gaussian_moments_solve(xi0, np.zeros(d), np.zeros((d, d)), horizon, min(0.01, horizon))
    C = moments[-1].cov
    rows = []
    for i in range(d):
        for j in range(i, d):
            centred = (fluct[:, i] - fluct[:, i].mean()) * (fluct[:, j] - fluct[:, j].mean())
            rows.append(MomentComparison(f"cov[{i},{j}]", centred.mean(), C[i, j],
                                         centred.std(ddof=1) / math.sqrt(replicates)))
    return rows


def simplex_ok(x):
    x = np.asarray(x)
    return bool(np.all(x >= 0) and np.all(np.abs(x.sum(axis=-1) - 1) <= TOLERANCES.simplex))
