"""Estimator-style wrappers: rows of X are sample configurations, ``predict`` returns q(n)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import MutationModel, PimModel
from .sampling import (
    SamplingProbabilities,
    expansion_general,
    pim_quadrature_oracle,
)


def _configs(X, d=None):
    X = check_array(X, dtype=None, ensure_min_samples=1)
    if not np.issubdtype(X.dtype, np.number):
        raise ValueError("configurations must be numeric")
    if np.any(X < 0) or np.any(X != np.round(X)):
        raise ValueError("configurations must hold non-negative integer counts")
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {X.shape[1]}")
    return [tuple(int(v) for v in row) for row in X]


class AsymptoticSamplingProbability(BaseEstimator):
    """Truncated asymptotic expansion of q(n) with ``n_terms`` coefficients beyond the leading one."""

    def __init__(self, theta=1.0, P=None, sigma=100.0, n_terms=1):
        self.theta = theta
        self.P = P
        self.sigma = sigma
        self.n_terms = n_terms

    def fit(self, X, y=None):
        model = MutationModel(self.theta, self.P)
        configs = _configs(X, model.d)
        budget = max(sum(n) for n in configs) + self.n_terms
        self.model_ = model
        self.table_ = expansion_general(model, max(budget, 1))
        self.n_features_in_ = model.d
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        configs = _configs(X, self.n_features_in_)
        out = np.empty(len(configs))
        for r, n in enumerate(configs):
            if sum(n) + self.n_terms > self.table_.max_budget:
                raise ValueError(f"{n} is larger than any configuration seen in fit")
            out[r] = self.table_.evaluate(n, self.sigma, self.n_terms)
        return out


class TruncatedSystemSamplingProbability(BaseEstimator):
    """q(n) from the truncated sampling recursion; ``predict_error`` gives the level_cap + 2 change."""

    def __init__(self, theta=1.0, P=None, sigma=100.0, level_cap=None, margin=8):
        self.theta = theta
        self.P = P
        self.sigma = sigma
        self.level_cap = level_cap
        self.margin = margin

    def fit(self, X, y=None):
        model = MutationModel(self.theta, self.P)
        configs = _configs(X, model.d)
        cap = self.level_cap or max(sum(n) for n in configs) + self.margin
        self.level_cap_ = cap
        self.probabilities_ = SamplingProbabilities.from_truncated_system(model, self.sigma, cap)
        self.n_features_in_ = model.d
        return self

    def predict(self, X):
        check_is_fitted(self, "probabilities_")
        return np.array([self.probabilities_(n) for n in _configs(X, self.n_features_in_)])

    def predict_error(self, X):
        check_is_fitted(self, "probabilities_")
        configs = _configs(X, self.n_features_in_)
        return np.array([self.probabilities_(n) * self.probabilities_.relative_error(n) for n in configs])


class QuadratureSamplingProbability(BaseEstimator):
    """q(n) under parent-independent mutation by quadrature of the stationary density (d <= 3)."""

    def __init__(self, theta=1.0, Q=None, sigmas=None, tol=1e-10):
        self.theta = theta
        self.Q = Q
        self.sigmas = sigmas
        self.tol = tol

    def fit(self, X, y=None):
        model = PimModel(self.theta, self.Q)
        _configs(X, model.d)
        self.model_ = model
        self.n_features_in_ = model.d
        return self

    def _results(self, X):
        check_is_fitted(self, "model_")
        return [pim_quadrature_oracle(n, self.model_, self.sigmas, tol=self.tol)
                for n in _configs(X, self.n_features_in_)]

    def predict(self, X):
        return np.array([r.value for r in self._results(X)])

    def predict_error(self, X):
        return np.array([r.error_estimate for r in self._results(X)])
