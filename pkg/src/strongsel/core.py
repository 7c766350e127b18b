"""Model types, tolerance constants and Gamma-ratio helpers shared by every module."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class Tolerances:
    simplex: float = 1e-12
    stochastic_row: float = 1e-12
    cross_check: float = 1e-9


TOLERANCES = Tolerances()


def log_gamma_ratio(a, k):
    """ln(Gamma(a+k)/Gamma(a)) as a sum of logs.

    Uses the conventions Gamma(z)/Gamma(0) = 0 for z > 0 (returned as -inf)
    and Gamma(0)/Gamma(0) = 1.
    """
    if a < 0:
        raise ValueError(f"log_gamma_ratio needs a >= 0, got {a}")
    k = int(k)
    if k < 0:
        raise ValueError(f"log_gamma_ratio needs k >= 0, got {k}")
    if k == 0:
        return 0.0
    if a == 0:
        return -math.inf
    return math.fsum(math.log(a + m) for m in range(k))


def gamma_ratio(a, k):
    return math.exp(log_gamma_ratio(a, k))


def rising_factorial(a, k):
    """(a)_k = a(a+1)...(a+k-1), valid for negative a."""
    k = int(k)
    if k < 0:
        raise ValueError(f"rising_factorial needs k >= 0, got {k}")
    out = 1.0
    for m in range(k):
        out *= a + m
        if out == 0.0:
            return 0.0
    return out


def check_irreducible(P):
    """True iff the directed support graph of P is strongly connected."""
    P = np.asarray(P, dtype=float)
    n_comp, _ = connected_components(csr_matrix(P > 0), directed=True, connection="strong")
    return n_comp == 1


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MutationModel:
    """Mutation rate theta and row-stochastic mutation matrix P over d alleles.

    Allele index 0 is the fit allele throughout the package.
    """

    theta: float
    P: np.ndarray
    irreducible: bool = field(init=False)

    def __post_init__(self):
        P = _readonly(self.P)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise ValueError(f"P must be a square matrix with d >= 2, got shape {P.shape}")
        if self.theta < 0 or not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite and >= 0, got {self.theta}")
        if np.any(P < 0) or np.any(P > 1):
            raise ValueError("P entries must lie in [0, 1]")
        rows = P.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > TOLERANCES.stochastic_row)
        if bad.size:
            raise ValueError(f"rows {bad.tolist()} of P do not sum to 1: {rows[bad].tolist()}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "irreducible", check_irreducible(P))

    @classmethod
    def from_pim(cls, theta, Q):
        Q = np.asarray(Q, dtype=float)
        return cls(theta, np.tile(Q, (Q.size, 1)))

    @property
    def d(self):
        return self.P.shape[0]

    @property
    def immigration(self):
        """theta * P[0, i]: CBI immigration rates of the unfit alleles (entry 0 unused)."""
        return self.theta * self.P[0]

    def require_irreducible(self):
        if not self.irreducible:
            raise ValueError("operation needs an irreducible mutation matrix")

    def pim_weights(self, atol=1e-14):
        """The common row Q if every row of P is equal, else None."""
        if np.all(np.abs(self.P - self.P[0]) <= atol):
            return self.P[0].copy()
        return None


@dataclass(frozen=True, eq=False)
class PimModel:
    """Parent-independent mutation: P[i, j] = Q[j] for every parent i."""

    theta: float
    Q: np.ndarray

    def __post_init__(self):
        Q = _readonly(self.Q)
        if Q.ndim != 1 or Q.size < 2:
            raise ValueError("Q must be a vector with at least two entries")
        if np.any(Q < 0) or abs(Q.sum() - 1.0) > TOLERANCES.stochastic_row:
            raise ValueError(f"Q must be a probability vector, got {Q.tolist()}")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "Q", Q)

    @property
    def d(self):
        return self.Q.size

    @property
    def irreducible(self):
        return bool(np.all(self.Q > 0))

    def to_mutation_model(self):
        return MutationModel.from_pim(self.theta, self.Q)


@dataclass(frozen=True, eq=False)
class SelectionRegime:
    """Selective strength sigma of allele 0 and sigma_rest of the others."""

    sigma: float
    sigma_rest: tuple = ()

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "sigma_rest", tuple(float(s) for s in self.sigma_rest))

    def vector(self, d):
        rest = self.sigma_rest or (0.0,) * (d - 1)
        if len(rest) != d - 1:
            raise ValueError(f"sigma_rest has {len(rest)} entries, expected {d - 1}")
        return np.array((self.sigma, *rest))

    @property
    def rest_is_zero(self):
        return all(s == 0.0 for s in self.sigma_rest)

    def require_zero_rest(self):
        if not self.rest_is_zero:
            raise ValueError("this operation is only defined for sigma_rest = 0")


def as_config(n, d=None):
    """Validate an allele-count vector and return it as a tuple of ints."""
    arr = np.asarray(n)
    if arr.ndim != 1:
        raise ValueError("a sample configuration is a 1-d vector of counts")
    if d is not None and arr.size != d:
        raise ValueError(f"configuration has {arr.size} entries, expected {d}")
    out = tuple(int(v) for v in arr)
    if any(v != float(w) for v, w in zip(out, arr)) or min(out, default=0) < 0:
        raise ValueError(f"counts must be non-negative integers, got {arr.tolist()}")
    return out


def as_simplex_point(x, d=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (d is not None and x.size != d):
        raise ValueError("simplex point has the wrong shape")
    if np.any(x < -TOLERANCES.simplex) or abs(x.sum() - 1.0) > TOLERANCES.simplex:
        raise ValueError(f"{x.tolist()} is not on the simplex")
    return np.clip(x, 0.0, None)


def unit(i, d):
    return tuple(1 if j == i else 0 for j in range(d))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    mutation: MutationModel
    selection: SelectionRegime
    pim: PimModel | None = None

    @property
    def d(self):
        return self.mutation.d


def parse_model(data):
    """Build a ModelSpec from a mapping with keys d, theta, P, sigma, sigma_rest, Q."""
    unknown = set(data) - {"d", "theta", "P", "sigma", "sigma_rest", "Q"}
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    if "theta" not in data:
        raise ValueError("model needs 'theta'")
    theta = float(data["theta"])
    d = int(data["d"]) if "d" in data else None
    pim = None
    if "Q" in data:
        pim = PimModel(theta, data["Q"])
        d = d or pim.d
        if pim.d != d:
            raise ValueError(f"Q has {pim.d} entries but d = {d}")
    if "P" in data:
        P = np.asarray(data["P"], dtype=float)
        if d is None:
            d = math.isqrt(P.size)
        if P.size != d * d:
            raise ValueError(f"P has {P.size} entries, expected {d * d}")
        mutation = MutationModel(theta, P.reshape(d, d))
        if pim is not None and not np.allclose(mutation.P, pim.to_mutation_model().P, rtol=0, atol=1e-12):
            raise ValueError("P and Q are both given but P rows differ from Q")
    elif pim is not None:
        mutation = pim.to_mutation_model()
    else:
        raise ValueError("model needs 'P' or 'Q'")
    sigma = float(data.get("sigma", 1.0))
    rest = tuple(data.get("sigma_rest", (0.0,) * (d - 1)))
    return ModelSpec(mutation, SelectionRegime(sigma, rest), pim)


def load_model(path):
    with Path(path).open("rb") as fh:
        return parse_model(tomllib.load(fh))
