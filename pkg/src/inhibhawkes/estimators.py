"""scikit-learn style wrappers around the functional API.

``X`` is always one :class:`EventSequence` or a list of them (or raw
``(times, marks[, horizon])`` tuples, see :func:`check_sequences`).
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import EventSequence, HawkesError, log_likelihood
from .estimate import (
    DEFAULT_EPS_GRID,
    FitConfig,
    choose_epsilon,
    confidence_select,
    fit,
    threshold_select,
)
from .gof import TOTAL, gof_report, time_rescale


def check_sequences(X, d: Optional[int] = None) -> list[EventSequence]:
    """Coerce ``X`` to a nonempty list of sequences sharing one dimension."""
    if isinstance(X, EventSequence) or (isinstance(X, tuple) and len(X) in (2, 3) and np.ndim(X[0]) == 1):
        X = [X]
    out = []
    for item in X:
        if isinstance(item, EventSequence):
            seq = item
        elif isinstance(item, tuple) and len(item) in (2, 3):
            seq = EventSequence(*item, d=d)
        else:
            raise HawkesError(f"cannot interpret {type(item).__name__} as an event sequence")
        out.append(seq)
    if not out:
        raise HawkesError("X contains no event sequences")
    dims = {s.d for s in out}
    if d is not None:
        dims.add(d)
    if len(dims) != 1:
        raise HawkesError(f"sequences disagree on the dimension: {sorted(dims)}")
    return out


class ExpHawkesMLE(BaseEstimator):
    """Maximum likelihood estimator for the exponential Hawkes model with inhibition.

    ``objective="approx"`` swaps the exact compensator for the integral of the
    signed intensity (baseline for comparisons).
    """

    def __init__(self, objective="exact", restarts=5, alpha_max=20.0, beta_max=50.0,
                 mu_max=None, max_iter=1000, random_state=0):
        self.objective = objective
        self.restarts = restarts
        self.alpha_max = alpha_max
        self.beta_max = beta_max
        self.mu_max = mu_max
        self.max_iter = max_iter
        self.random_state = random_state

    def _config(self):
        return FitConfig(
            objective=self.objective,
            restarts=self.restarts,
            alpha_max=self.alpha_max,
            beta_max=self.beta_max,
            mu_max=self.mu_max,
            max_iter=self.max_iter,
            seed=self.random_state,
        )

    def fit(self, X, y=None, support=None, init=None):
        seqs = check_sequences(X)
        result = fit(seqs, self._config(), support=support, init=init)
        self.fit_result_ = result
        self.model_ = result.model
        self.loglik_ = result.loglik
        self.per_dimension_loglik_ = result.per_dimension_loglik
        self.converged_ = result.converged
        self.n_dims_ = result.model.d
        return self

    def score(self, X, y=None):
        """Mean exact log-likelihood per sequence."""
        check_is_fitted(self, "model_")
        seqs = check_sequences(X, self.n_dims_)
        return float(np.mean([log_likelihood(self.model_, s) for s in seqs]))

    def transform(self, X, target=TOTAL):
        """Time-rescaled inter-event increments, one array per sequence."""
        check_is_fitted(self, "model_")
        return [time_rescale(self.model_, s, target) for s in check_sequences(X, self.n_dims_)]

    def gof(self, X, q=0.05):
        check_is_fitted(self, "model_")
        return gof_report(self.model_, check_sequences(X, self.n_dims_), q)


class SupportSelector(BaseEstimator):
    """Interaction-graph selection: ``"eps"`` (MLE-epsilon), ``"cfe"`` or ``"cfst"``.

    For ``"eps"`` the training sequences are pooled into one fit; ``level`` is
    epsilon, or ``"auto"`` to pick it on ``X_test``.  For the interval methods
    every training sequence is fitted separately and ``level`` is gamma.
    """

    def __init__(self, method="cfst", level=0.1, q=None, candidate_eps=DEFAULT_EPS_GRID,
                 use_ratio=False, restarts=5, random_state=0):
        self.method = method
        self.level = level
        self.q = q
        self.candidate_eps = candidate_eps
        self.use_ratio = use_ratio
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None, X_test=None):
        seqs = check_sequences(X)
        config = FitConfig(restarts=self.restarts, seed=self.random_state)
        if self.method == "eps":
            base = fit(seqs, config)
            level = self.level
            if level == "auto":
                if X_test is None:
                    raise HawkesError("level='auto' needs X_test")
                level = choose_epsilon([base], [seqs], check_sequences(X_test, seqs[0].d),
                                       self.candidate_eps, config, use_ratio=self.use_ratio)
            selection = threshold_select(base, seqs, float(level), config, use_ratio=self.use_ratio)
            self.fits_ = [base]
        elif self.method in ("cfe", "cfst"):
            fits = [fit(s, config) for s in seqs]
            kind = "empirical" if self.method == "cfe" else "student"
            selection = confidence_select(fits, seqs, float(self.level), kind, self.q, config)
            self.fits_ = fits
        else:
            raise HawkesError(f"method must be 'eps', 'cfe' or 'cfst', got {self.method!r}")
        self.selection_ = selection
        self.support_ = selection.support
        self.model_ = selection.refit.model
        return self

    def get_support(self):
        check_is_fitted(self, "support_")
        return self.support_
