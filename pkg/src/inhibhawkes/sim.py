"""Ogata thinning for Hawkes processes with inhibition, and benchmark scenarios.

The dominating rate keeps only the excitatory part of the history::

    lambda_plus(t) = sum_i (mu_i + sum_j sum_{T^j <= t} max(alpha_ij, 0) exp(-beta_i (t - T^j)))

which can only decrease between events, so freezing it at the current
candidate time gives a valid bound until the next candidate.

Random numbers come from numpy's Philox4x64 counter-based generator seeded
with the 64-bit ``seed``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EventSequence, HawkesError, HawkesModel, NumericalError, spectral_radius

MAX_CANDIDATES = 10**8

SCENARIOS = {
    "S1": HawkesModel(mu=[0.5, 1.0], alpha=[[-1.9, 3.0], [1.2, 1.5]], beta=[5.0, 8.0]),
    "S2": HawkesModel(mu=[0.7, 1.0], alpha=[[0.2, 0.0], [-0.6, 1.2]], beta=[3.0, 2.0]),
    "S3": HawkesModel(mu=[1.2, 1.0], alpha=[[-1.0, 0.1], [0.0, -0.8]], beta=[0.3, 0.5]),
}


@dataclass(frozen=True)
class SimConfig:
    """Either ``n_events`` (stop at exactly that many events) or ``horizon``."""

    model: HawkesModel
    n_events: Optional[int] = None
    horizon: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if (self.n_events is None) == (self.horizon is None):
            raise HawkesError("give exactly one of n_events or horizon")
        if self.n_events is not None and self.n_events < 1:
            raise HawkesError("n_events must be >= 1")
        if self.horizon is not None and not self.horizon > 0:
            raise HawkesError("horizon must be > 0")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


class _Stream:
    """Chunked draws; one ``rng`` call per 4096 values keeps the loop cheap."""

    def __init__(self, rng, draw):
        self._rng = rng
        self._draw = draw
        self._buf = np.empty(0)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._buf.shape[0]:
            self._buf = self._draw(self._rng, 4096)
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return value


def simulate(config: SimConfig, check_bound: bool = False) -> EventSequence:
    """Simulate one realisation by thinning.

    ``check_bound`` asserts at every candidate that the true total intensity
    does not exceed the dominating rate.
    """
    model = config.model
    report = spectral_radius(model)
    if not report.stable:
        warnings.warn(
            f"spectral radius of the excitation matrix is {report.radius:.3g} >= 1; "
            "the process may explode",
            RuntimeWarning,
            stacklevel=2,
        )
    d = model.d
    mu, beta = model.mu, model.beta
    a_pos = np.maximum(model.alpha, 0.0)
    a_neg = np.minimum(model.alpha, 0.0)
    rng = make_rng(config.seed)
    expo = _Stream(rng, lambda g, n: g.standard_exponential(n))
    unif = _Stream(rng, lambda g, n: g.random(n))

    excite = np.zeros(d)
    inhibit = np.zeros(d)
    t = 0.0
    times: list[float] = []
    marks: list[int] = []
    target = config.n_events
    horizon = config.horizon
    candidates = 0
    while True:
        bound = float(np.sum(mu + excite))
        t_new = t + expo.next() / bound
        if horizon is not None and t_new > horizon:
            break
        candidates += 1
        if candidates > MAX_CANDIDATES:
            raise NumericalError(f"thinning aborted after {MAX_CANDIDATES} candidate draws")
        decay = np.exp(-beta * (t_new - t))
        excite *= decay
        inhibit *= decay
        t = t_new
        lam = np.maximum(mu + excite + inhibit, 0.0)
        total = float(lam.sum())
        if check_bound:
            assert total <= bound * (1 + 1e-12), (total, bound)
        if unif.next() * bound > total:
            continue
        u = unif.next() * total
        m = int(np.searchsorted(np.cumsum(lam), u, side="right"))
        m = min(m, d - 1)
        while lam[m] == 0.0:
            m -= 1
        times.append(t)
        marks.append(m)
        excite += a_pos[:, m]
        inhibit += a_neg[:, m]
        if target is not None and len(times) >= target:
            break
    if horizon is None:
        horizon = times[-1]
    return EventSequence(np.array(times), np.array(marks, dtype=np.int64), horizon=horizon, d=d)


def scenario(name: str, path=None) -> HawkesModel:
    """Benchmark parameter sets S1, S2, S3 (two dimensions) or a file-driven D10 model."""
    if name in SCENARIOS:
        return SCENARIOS[name]
    if name == "D10-spec":
        if path is None:
            raise HawkesError("scenario 'D10-spec' needs a model file path")
        from .formats import read_model

        return read_model(path)
    raise HawkesError(f"unknown scenario {name!r}; expected one of S1, S2, S3, D10-spec")
