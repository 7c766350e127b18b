"""Block-counting process of the reduced conditional ancestral selection graph.

Exact rates need finite-sigma sampling probabilities, supplied by any
provider exposing ``log(n)`` (and optionally ``relative_error(n)``) such as
:class:`strongsel.sampling.SamplingProbabilities`, or a plain callable n -> q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_config
from .sampling import SamplingProbabilities, q0

KINDS = ("coalesce-real", "remove-virtual", "mutate-real", "create-virtual", "mutate-to-fit")


@dataclass(frozen=True)
class AsgState:
    """Real lineage counts n and virtual lineage counts nu."""

    n: tuple
    nu: tuple = None

    def __post_init__(self):
        n = as_config(self.n)
        nu = as_config(self.nu if self.nu is not None else (0,) * len(n), len(n))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "nu", nu)

    @property
    def d(self):
        return len(self.n)

    @property
    def combined(self):
        return tuple(a + b for a, b in zip(self.n, self.nu))

    @property
    def size(self):
        return sum(self.n) + sum(self.nu)

    @property
    def unfit(self):
        return self.size - self.n[0] - self.nu[0]

    def moved(self, dn=None, dnu=None):
        n, nu = list(self.n), list(self.nu)
        for i, delta in (dn or {}).items():
            n[i] += delta
        for i, delta in (dnu or {}).items():
            nu[i] += delta
        return AsgState(tuple(n), tuple(nu))


@dataclass(frozen=True)
class RateEntry:
    target: AsgState
    rate: float
    kind: str
    source: int
    dest: int = None
    rel_error: float = 0.0


@dataclass(frozen=True)
class RateTable:
    entries: tuple
    total: float = field(init=False)
    expected_total: float = None

    def __post_init__(self):
        object.__setattr__(self, "total", math.fsum(e.rate for e in self.entries))

    @property
    def relative_discrepancy(self):
        if self.expected_total is None:
            return None
        if self.expected_total == 0:
            return abs(self.total)
        return abs(self.total - self.expected_total) / self.expected_total

    def rate(self, kind, source, dest=None):
        return math.fsum(e.rate for e in self.entries
                         if e.kind == kind and e.source == source and (dest is None or e.dest == dest))


def _provider_log(provider, n):
    if min(n) < 0:
        return -math.inf
    if hasattr(provider, "log"):
        return provider.log(n)
    value = provider(n)
    return math.log(value) if value > 0 else -math.inf


def _provider_err(provider, n):
    if min(n) < 0 or not hasattr(provider, "relative_error"):
        return 0.0
    return provider.relative_error(n)


def reduced_total_rate(state, theta, sigma):
    size = state.size
    return 0.5 * size * (size - 1 + theta) + 0.5 * sigma * state.unfit


def asg_rates(state, m, sigma, q_provider):
    """Exact rates of the reduced conditional ASG out of ``state``.

    Mutation self-loops (i -> i) are kept so the table total matches the
    closed-form total rate; they leave the state unchanged.
    """
    if not isinstance(state, AsgState):
        state = AsgState(*state)
    if state.nu[0] != 0:
        raise ValueError("the reduced graph carries no virtual fit lineages")
    if state.size < 1:
        raise ValueError("state has no lineages")
    d, theta, P = m.d, m.theta, m.P
    base = state.combined
    log_base = _provider_log(q_provider, base)
    if not math.isfinite(log_base):
        raise ValueError(f"sampling probability of {base} underflows or is zero")
    err_base = _provider_err(q_provider, base)

    def ratio(target):
        log_t = _provider_log(q_provider, target)
        if log_t == -math.inf:
            return 0.0, 0.0
        return math.exp(log_t - log_base), _provider_err(q_provider, target) + err_base

    def shifted(minus=None, plus=None):
        c = list(base)
        if minus is not None:
            c[minus] -= 1
        if plus is not None:
            c[plus] += 1
        return tuple(c)

    entries = []
    for i in range(d):
        n_i, nu_i = state.n[i], state.nu[i]
        if n_i >= 2:
            r, e = ratio(shifted(minus=i))
            entries.append(RateEntry(state.moved({i: -1}), 0.5 * n_i * (n_i - 1) * r, "coalesce-real", i, None, e))
        if i >= 1 and nu_i >= 1:
            r, e = ratio(shifted(minus=i))
            rate = 0.5 * nu_i * (nu_i - 1 + 2 * n_i) * r
            worst = e
            # a mutating virtual lineage is discarded rather than retyped
            for j in range(d):
                if P[j, i] > 0:
                    rj, ej = ratio(shifted(minus=i, plus=j))
                    rate += nu_i * 0.5 * theta * P[j, i] * rj
                    worst = max(worst, ej)
            entries.append(RateEntry(state.moved(dnu={i: -1}), rate, "remove-virtual", i, None, worst))
        if n_i >= 1:
            for j in range(d):
                if P[j, i] > 0:
                    r, e = ratio(shifted(minus=i, plus=j))
                    target = state if i == j else state.moved({i: -1, j: +1})
                    entries.append(RateEntry(target, n_i * 0.5 * theta * P[j, i] * r, "mutate-real", i, j, e))
    for i in range(1, d):
        r, e = ratio(shifted(plus=i))
        entries.append(RateEntry(state.moved(dnu={i: +1}), state.size * 0.5 * sigma * r, "create-virtual", i, None, e))
    return RateTable(tuple(entries), reduced_total_rate(state, theta, sigma))


def unreduced_rates(state, m, sigma, q_provider):
    """Rate list of the unreduced conditional ASG, used only for its total-rate identity.

    The total is (1/2)|n+nu|(|n+nu| - 1 + theta + sigma), which explodes with sigma,
    so this graph is never simulated.
    """
    if not isinstance(state, AsgState):
        state = AsgState(*state)
    d, theta, P = m.d, m.theta, m.P
    base = state.combined
    log_base = _provider_log(q_provider, base)
    if not math.isfinite(log_base):
        raise ValueError(f"sampling probability of {base} underflows or is zero")

    def ratio(c):
        log_t = _provider_log(q_provider, c)
        return 0.0 if log_t == -math.inf else math.exp(log_t - log_base)

    def shifted(minus=None, plus=None):
        c = list(base)
        if minus is not None:
            c[minus] -= 1
        if plus is not None:
            c[plus] += 1
        return tuple(c)

    entries = []
    fit_total = state.n[0] + state.nu[0]
    for i in range(d):
        n_i, nu_i = state.n[i], state.nu[i]
        if n_i >= 2:
            entries.append(RateEntry(state.moved({i: -1}), 0.5 * n_i * (n_i - 1) * ratio(shifted(minus=i)),
                                     "coalesce-real", i))
        if nu_i >= 1:
            entries.append(RateEntry(state.moved(dnu={i: -1}),
                                     0.5 * nu_i * (nu_i - 1 + 2 * n_i) * ratio(shifted(minus=i)), "remove-virtual", i))
        for j in range(d):
            if P[j, i] == 0:
                continue
            r = ratio(shifted(minus=i, plus=j))
            if n_i >= 1:
                target = state if i == j else state.moved({i: -1, j: +1})
                entries.append(RateEntry(target, n_i * 0.5 * theta * P[j, i] * r, "mutate-real", i, j))
            if nu_i >= 1:
                target = state if i == j else state.moved(dnu={i: -1, j: +1})
                entries.append(RateEntry(target, nu_i * 0.5 * theta * P[j, i] * r, "mutate-virtual", i, j))
        r = ratio(shifted(plus=i))
        if i >= 1:
            entries.append(RateEntry(state.moved(dnu={i: +1}), state.size * 0.5 * sigma * r, "create-virtual", i))
        # selective events whose parental lineage is the fit incoming branch
        entries.append(RateEntry(state.moved(dnu={i: +1}), fit_total * 0.5 * sigma * r, "create-virtual-fit-parent", i))
    expected = 0.5 * state.size * (state.size - 1 + theta + sigma)
    return RateTable(tuple(entries), expected)


# --- strong-selection limits ---------------------------------------------------

def asymptotic_rates(state, m, regime=None):
    """Limiting rates as (slow, fast); the table for the inactive regime is None.

    ``regime`` ("slow" or "fast") asserts which regime the state belongs to.
    Fast rates are on the clock sped up by sigma.
    """
    if not isinstance(state, AsgState):
        state = AsgState(*state)
    if state.nu[0] != 0:
        raise ValueError("the reduced graph carries no virtual fit lineages")
    actual = "fast" if state.unfit > 0 else "slow"
    if regime is not None and regime != actual:
        raise ValueError(f"state {state} belongs to the {actual} regime, not {regime}")
    imm = m.immigration
    if actual == "slow":
        entries = []
        n1 = state.n[0]
        if n1 >= 2:
            entries.append(RateEntry(state.moved({0: -1}), 0.5 * n1 * (n1 - 1), "coalesce-real", 0))
        for i in range(1, m.d):
            entries.append(RateEntry(state.moved(dnu={i: +1}), 0.5 * state.size * imm[i], "create-virtual", i))
        return RateTable(tuple(entries)), None
    entries = []
    for i in range(1, m.d):
        n_i, nu_i = state.n[i], state.nu[i]
        if n_i + nu_i == 0:
            continue
        denom = n_i + nu_i - 1 + imm[i]
        if denom <= 0:
            raise ValueError(f"fast rates undefined for type {i}: n_i + nu_i - 1 + theta P_0i = 0")
        if n_i >= 2:
            entries.append(RateEntry(state.moved({i: -1}), 0.5 * n_i * (n_i - 1) / denom, "coalesce-real", i))
        if nu_i >= 1:
            entries.append(RateEntry(state.moved(dnu={i: -1}), 0.5 * nu_i * (nu_i - 1 + 2 * n_i + imm[i]) / denom,
                                     "remove-virtual", i))
        if n_i >= 1 and imm[i] > 0:
            entries.append(RateEntry(state.moved({i: -1, 0: +1}), 0.5 * n_i * imm[i] / denom, "mutate-to-fit", i, 0))
    return None, RateTable(tuple(entries))


def fast_rate_distance(state, m, sigma, q_provider):
    """Max over fast-limit jumps of |rate/sigma - limit| for a state with unfit lineages."""
    _, fast = asymptotic_rates(state, m, regime="fast")
    exact = asg_rates(state, m, sigma, q_provider)
    exact_by = {}
    for e in exact.entries:
        if e.kind == "mutate-real" and e.dest == 0 and e.source >= 1:
            key = ("mutate-to-fit", e.source)
        elif e.kind in ("coalesce-real", "remove-virtual"):
            key = (e.kind, e.source)
        else:
            continue
        exact_by[key] = exact_by.get(key, 0.0) + e.rate
    worst = 0.0
    for e in fast.entries:
        worst = max(worst, abs(exact_by.get((e.kind, e.source), 0.0) / sigma - e.rate))
    return worst


# --- limiting process simulation -------------------------------------------------

def simulate_fast(n0, m, seed):
    """Jump chain of the fast process from (n0, 0) until no unfit lineage is left.

    Returns a list of (time, kind, type_index, state_after) with state_after the
    real lineage counts.
    """
    n = list(as_config(n0, m.d))
    rng = np.random.default_rng(seed)
    imm = m.immigration
    events = []
    t = 0.0
    while sum(n) - n[0] > 0:
        rates, moves = [], []
        for i in range(1, m.d):
            if n[i] == 0:
                continue
            denom = n[i] - 1 + imm[i]
            if denom <= 0:
                raise ValueError(f"fast rates undefined for type {i}")
            if n[i] >= 2:
                rates.append(0.5 * n[i] * (n[i] - 1) / denom)
                moves.append(("coalesce-real", i))
            if imm[i] > 0:
                rates.append(0.5 * n[i] * imm[i] / denom)
                moves.append(("mutate-to-fit", i))
        total = math.fsum(rates)
        t += rng.exponential(1.0 / total)
        kind, i = moves[rng.choice(len(rates), p=np.asarray(rates) / total)]
        n[i] -= 1
        if kind == "mutate-to-fit":
            n[0] += 1
        events.append((t, kind, i, tuple(n)))
    return events


def fast_process_at(n0, m, t, size, rng):
    """Counts M(t) of ``size`` independent fast-process runs stopped at time t.

    Vectorised jump chain: every run advances its own exponential clock and
    freezes once the clock passes t or no unfit lineage is left.
    """
    n0 = as_config(n0, m.d)
    imm = m.immigration
    state = np.tile(np.array(n0, dtype=np.int64), (size, 1))
    clock = np.zeros(size)
    active = np.ones(size, dtype=bool)
    while True:
        active &= state[:, 1:].sum(axis=1) > 0
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return state
        cur = state[idx]
        coal = np.zeros((idx.size, m.d))
        mut = np.zeros((idx.size, m.d))
        for i in range(1, m.d):
            k = cur[:, i].astype(float)
            denom = k - 1 + imm[i]
            ok = k > 0
            if np.any(ok & (denom <= 0)):
                raise ValueError(f"fast rates undefined for type {i}")
            safe = np.where(ok, denom, 1.0)
            coal[:, i] = np.where(ok, 0.5 * k * (k - 1) / safe, 0.0)
            mut[:, i] = np.where(ok, 0.5 * k * imm[i] / safe, 0.0)
        rates = np.concatenate([coal, mut], axis=1)
        total = rates.sum(axis=1)
        clock[idx] += rng.exponential(1.0, idx.size) / total
        stopped = clock[idx] > t
        active[idx[stopped]] = False
        go = ~stopped
        if not np.any(go):
            continue
        cum = np.cumsum(rates[go], axis=1) / total[go, None]
        pick = (cum < rng.random(go.sum())[:, None]).sum(axis=1)
        pick = np.minimum(pick, 2 * m.d - 1)
        rows = idx[go]
        typ = pick % m.d
        state[rows, typ] -= 1
        state[rows[pick >= m.d], 0] += 1


def simulate_slow(n1, theta_out, seed, record_virtual=False):
    """Kingman block counts of the fit lineages from n1 down to one.

    Virtual unfit lineages are created at rate n * theta_out / 2 but are removed
    instantly on this clock, so by default they are not recorded; with
    ``record_virtual`` each appears as a create/remove pair at the same time.
    """
    if n1 < 1:
        raise ValueError("n1 must be >= 1")
    if theta_out < 0:
        raise ValueError("theta_out must be >= 0")
    rng = np.random.default_rng(seed)
    events = []
    t = 0.0
    n = int(n1)
    while n > 1:
        coal = 0.5 * n * (n - 1)
        create = 0.5 * n * theta_out if record_virtual else 0.0
        t += rng.exponential(1.0 / (coal + create))
        if create and rng.random() * (coal + create) >= coal:
            events.append((t, "create-virtual", None, n))
            events.append((t, "remove-virtual", None, n))
            continue
        n -= 1
        events.append((t, "coalesce-real", 0, n))
    return events


@dataclass(frozen=True)
class ScalingProbe:
    n: tuple
    sigmas: tuple
    values: tuple
    slope: float
    expected_slope: int
    constant: float
    leading: float

    @property
    def constant_rel_diff(self):
        return abs(self.constant - self.leading) / self.leading if self.leading else math.inf


def genealogical_interpretation_probe(n, m, sigma_list, level_cap=None):
    """Fit log q(n) against log sigma; the slope should be -(|n| - n_0), the constant q0(n).

    The constant is read at the largest sigma as q * sigma^(|n| - n_0).
    """
    n = as_config(n, m.d)
    unfit = sum(n) - n[0]
    cap = level_cap or sum(n) + 12
    values = []
    for s in sigma_list:
        sp = SamplingProbabilities.from_truncated_system(m, s, cap)
        values.append(sp(n))
    slope = float(np.polyfit(np.log(sigma_list), np.log(values), 1)[0])
    constant = values[-1] * sigma_list[-1] ** unfit
    return ScalingProbe(n, tuple(sigma_list), tuple(values), slope, -unfit, constant, q0(n, m))

