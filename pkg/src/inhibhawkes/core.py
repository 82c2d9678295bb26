"""Model types and exact evaluation of intensity, compensator and log-likelihood.

The model is the multivariate exponential Hawkes process whose decay rate
depends only on the receiving dimension::

    lambda_i*(t) = mu_i + sum_j sum_{T^j_k <= t} alpha_ij exp(-beta_i (t - T^j_k))
    lambda_i(t)  = max(0, lambda_i*(t))

Dimensions and marks are 0-based throughout the Python API.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import _kernels as K

INFEASIBLE = -1e18
_PENALTY = 1e15


class HawkesError(ValueError):
    """Invalid model, event data or argument."""


class NumericalError(RuntimeError):
    """A computation could not produce a usable result (divergent thinning, no feasible fit)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HawkesModel:
    """Baselines ``mu`` (d,), interactions ``alpha`` (d, d), decays ``beta`` (d,).

    ``alpha[i, j]`` is the influence of dimension ``j`` on dimension ``i``.
    """

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        beta = np.array(self.beta, dtype=float).reshape(-1)
        d = mu.shape[0]
        alpha = np.array(self.alpha, dtype=float)
        if d == 0:
            raise HawkesError("model needs at least one dimension")
        if alpha.shape != (d, d) or beta.shape != (d,):
            raise HawkesError(
                f"inconsistent shapes: mu {mu.shape}, alpha {alpha.shape}, beta {beta.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise HawkesError("model parameters must be finite")
        if np.any(mu <= 0) or np.any(beta <= 0):
            raise HawkesError("mu and beta must be strictly positive")
        object.__setattr__(self, "mu", _readonly(mu))
        object.__setattr__(self, "alpha", _readonly(alpha))
        object.__setattr__(self, "beta", _readonly(beta))

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    def __eq__(self, other):
        if not isinstance(other, HawkesModel):
            return NotImplemented
        return (
            np.array_equal(self.mu, other.mu)
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
        )

    def __repr__(self):
        return (
            f"HawkesModel(mu={self.mu.tolist()}, alpha={self.alpha.tolist()}, "
            f"beta={self.beta.tolist()})"
        )

    def theta(self, i: int) -> np.ndarray:
        """Parameter block of dimension ``i``: (mu_i, alpha_i1..alpha_id, beta_i)."""
        return np.concatenate(([self.mu[i]], self.alpha[i], [self.beta[i]]))

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "HawkesModel":
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        return cls(
            mu=[b[0] for b in blocks],
            alpha=[b[1:-1] for b in blocks],
            beta=[b[-1] for b in blocks],
        )


@dataclass(frozen=True, eq=False)
class EventSequence:
    """Strictly increasing event times with 0-based dimension marks on (0, horizon].

    ``horizon`` defaults to the last event time and ``d`` to ``max(marks) + 1``.
    """

    times: np.ndarray
    marks: np.ndarray
    horizon: Optional[float] = None
    d: Optional[int] = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        raw_marks = np.asarray(self.marks).reshape(-1)
        if raw_marks.size and not np.all(np.equal(np.mod(raw_marks, 1), 0)):
            raise HawkesError("marks must be integers")
        marks = raw_marks.astype(np.int64)
        if times.shape != marks.shape:
            raise HawkesError("times and marks must have the same length")
        if times.size:
            if not np.all(np.isfinite(times)):
                raise HawkesError("event times must be finite")
            if times[0] <= 0:
                raise HawkesError("event times must be strictly positive")
            if np.any(np.diff(times) <= 0):
                raise HawkesError("event times must be strictly increasing (no simultaneous events)")
            if marks.min() < 0:
                raise HawkesError("marks must be nonnegative")
        horizon = self.horizon
        if horizon is None:
            if not times.size:
                raise HawkesError("an empty sequence needs an explicit horizon")
            horizon = float(times[-1])
        horizon = float(horizon)
        if not np.isfinite(horizon) or horizon <= 0:
            raise HawkesError("horizon must be a positive finite number")
        if times.size and times[-1] > horizon:
            raise HawkesError("horizon precedes the last event time")
        d = self.d
        if d is None:
            d = int(marks.max()) + 1 if marks.size else 1
        d = int(d)
        if d < 1:
            raise HawkesError("d must be positive")
        if marks.size and marks.max() >= d:
            raise HawkesError(f"mark {int(marks.max())} out of range for d={d}")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "marks", _readonly(marks))
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "d", d)

    def __len__(self):
        return self.times.shape[0]

    def __eq__(self, other):
        if not isinstance(other, EventSequence):
            return NotImplemented
        return (
            self.d == other.d
            and self.horizon == other.horizon
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.marks, other.marks)
        )

    def __repr__(self):
        return f"EventSequence(n={len(self)}, d={self.d}, horizon={self.horizon})"

    def counts(self) -> np.ndarray:
        """N^i(horizon) for every dimension."""
        return np.bincount(self.marks, minlength=self.d)

    def times_of(self, i: int) -> np.ndarray:
        return self.times[self.marks == i]

    def count_until(self, t: float, i: Optional[int] = None) -> int:
        """N(t) or N^i(t)."""
        n = int(np.searchsorted(self.times, t, side="right"))
        if i is None:
            return n
        return int(np.count_nonzero(self.marks[:n] == i))


@dataclass(frozen=True)
class IntervalState:
    """Recursion state after processing one event.

    ``lambda_star_at_event`` includes the jump of that event; ``restart`` is the
    restart time on the interval up to the next event (or the horizon);
    ``partial_compensator`` is the compensator accumulated up to ``last_time``.
    """

    lambda_star_at_event: np.ndarray
    restart: np.ndarray
    partial_compensator: np.ndarray
    last_time: float


@dataclass(frozen=True)
class SpectralReport:
    radius: float
    stable: bool


def _check_dim(model: HawkesModel, i: int) -> int:
    if not isinstance(i, (int, np.integer)) or not 0 <= i < model.d:
        raise HawkesError(f"dimension index {i!r} out of range for d={model.d}")
    return int(i)


def _check_pair(model: HawkesModel, seq: EventSequence):
    if seq.d != model.d:
        raise HawkesError(f"sequence has d={seq.d} but model has d={model.d}")


def underlying_intensity(model: HawkesModel, seq: EventSequence, i: int, t: float) -> float:
    """Signed intensity of dimension ``i`` at time ``t`` (right-continuous)."""
    i = _check_dim(model, i)
    _check_pair(model, seq)
    if t < 0:
        raise HawkesError("t must be nonnegative")
    return K.underlying_at(seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i], float(t))


def conditional_intensity(model: HawkesModel, seq: EventSequence, i: int, t: float) -> float:
    """Intensity of dimension ``i`` as seen by the compensator: zero before the restart time."""
    i = _check_dim(model, i)
    _check_pair(model, seq)
    if t < 0:
        raise HawkesError("t must be nonnegative")
    return K.conditional_at(
        seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i], float(t), seq.horizon
    )


def restart_time(model: HawkesModel, lambda_star_at_Tk: float, i: int, T_k: float, T_next: float) -> float:
    """First instant in [T_k, T_next] where the signed intensity of ``i`` is nonnegative."""
    i = _check_dim(model, i)
    if not T_k < T_next:
        raise HawkesError("restart_time needs T_k < T_next")
    return K.restart(model.mu[i], model.beta[i], float(lambda_star_at_Tk), float(T_k), float(T_next))


def compensator(model: HawkesModel, seq: EventSequence, i: int, t: float) -> float:
    """Closed-form integral of the intensity of dimension ``i`` over [0, t]."""
    i = _check_dim(model, i)
    _check_pair(model, seq)
    if t < 0:
        raise HawkesError("t must be nonnegative")
    return K.compensator_at(
        seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i], float(t), False
    )


def approx_compensator(model: HawkesModel, seq: EventSequence, i: int, t: float) -> float:
    """Integral of the signed intensity (no positive part) over [0, t]."""
    i = _check_dim(model, i)
    _check_pair(model, seq)
    return K.compensator_at(
        seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i], float(t), True
    )


def dimension_loglik(theta_i, seq: EventSequence, i: int, approx: bool = False) -> float:
    """Log-likelihood of dimension ``i`` for the parameter block ``theta_i``.

    ``theta_i`` is (mu_i, alpha_i1..alpha_id, beta_i). Returns a value below
    ``INFEASIBLE`` when an event of ``i`` falls where the intensity is zero.
    """
    mu = theta_i[0]
    beta = theta_i[-1]
    arow = np.ascontiguousarray(theta_i[1:-1], dtype=float)
    ev, comp, bad = K.dim_pass(seq.times, seq.marks, seq.horizon, i, float(mu), arow, float(beta), approx)
    if bad:
        return INFEASIBLE - _PENALTY * bad
    return ev - comp


def surrogate_loglik(theta_i, seq: EventSequence, i: int, floor: float, approx: bool = False) -> float:
    """C1 stand-in for ``dimension_loglik``: log(x) is continued linearly below ``floor``.

    Equal to the exact value wherever every event intensity of ``i`` is >= floor.
    """
    arow = np.ascontiguousarray(theta_i[1:-1], dtype=float)
    ev, comp, _ = K.dim_pass(seq.times, seq.marks, seq.horizon, i, float(theta_i[0]), arow,
                             float(theta_i[-1]), approx, float(floor))
    return ev - comp


def is_feasible(value: float) -> bool:
    return value > INFEASIBLE / 2


def _loglik(model, seq, per_dimension, approx):
    _check_pair(model, seq)
    per = np.array([dimension_loglik(model.theta(i), seq, i, approx) for i in range(model.d)])
    if per_dimension:
        return per
    return float(per.sum())


def log_likelihood(model: HawkesModel, seq: EventSequence, per_dimension: bool = False):
    """Exact log-likelihood, streamed over the events in O(N d).

    With ``per_dimension`` the d per-dimension terms are returned; their sum is
    the total.  Infeasible parameters give a large negative sentinel instead of
    ``-inf`` (see ``INFEASIBLE``).
    """
    return _loglik(model, seq, per_dimension, approx=False)


def approx_log_likelihood(model: HawkesModel, seq: EventSequence, per_dimension: bool = False):
    """Log-likelihood with the compensator replaced by the integral of the signed intensity."""
    return _loglik(model, seq, per_dimension, approx=True)


def interval_states(model: HawkesModel, seq: EventSequence) -> Iterator[IntervalState]:
    """Yield the recursion state after each event, vectorised over dimensions.

    Pure-numpy counterpart of the compiled likelihood pass; handy for
    inspection and as a cross-check.
    """
    _check_pair(model, seq)
    mu, alpha, beta = model.mu, model.alpha, model.beta
    times, marks = seq.times, seq.marks
    n = len(seq)
    if n == 0:
        return
    comp = mu * times[0]
    lam = mu + alpha[:, marks[0]]
    for k in range(n):
        t_k = times[k]
        t_next = times[k + 1] if k + 1 < n else seq.horizon
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.maximum((mu - lam) / mu, K.LOG_GUARD)
            star = np.where(lam < 0, t_k + np.log(ratio) / beta, t_k)
        star = np.minimum(star, t_next)
        yield IntervalState(lam.copy(), star, comp.copy(), float(t_k))
        if k + 1 < n:
            active = star < t_next
            piece = mu * (t_next - star) + (lam - mu) / beta * (
                np.exp(-beta * (star - t_k)) - np.exp(-beta * (t_next - t_k))
            )
            comp = comp + np.where(active, piece, 0.0)
            lam = mu + (lam - mu) * np.exp(-beta * (t_next - t_k)) + alpha[:, marks[k + 1]]


def compensator_at_events(model: HawkesModel, seq: EventSequence, i: int) -> np.ndarray:
    """Lambda^i evaluated at every global event time."""
    i = _check_dim(model, i)
    _check_pair(model, seq)
    return K.compensator_at_events(seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i])


def spectral_radius(model: HawkesModel, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> SpectralReport:
    """Spectral radius of (max(0, alpha_ij) / beta_i)_ij by shifted power iteration.

    The shift ``c I`` makes the Perron root strictly dominant, so periodic
    nonnegative matrices converge too.  Falls back to a dense eigen-solve if
    the iteration stalls (defective Perron root).
    """
    S = np.maximum(model.alpha, 0.0) / model.beta[:, None]
    scale = S.max()
    if scale == 0:
        return SpectralReport(0.0, True)
    shift = scale
    x = np.random.default_rng(seed).uniform(0.5, 1.5, model.d)
    x /= np.linalg.norm(x)
    radius = None
    for _ in range(max_iter):
        sx = S @ x
        rq = float(x @ sx)
        # successive Rayleigh values stall long before the eigenvalue is accurate
        # for non-normal S; the residual is the reliable test
        if rq > 0 and np.linalg.norm(sx - rq * x) <= 1e-3 * tol * rq:
            radius = rq
            break
        y = sx + shift * x
        x = y / np.linalg.norm(y)
    if radius is None:
        radius = float(np.max(np.abs(np.linalg.eigvals(S))))
    radius = max(float(radius), 0.0)
    return SpectralReport(radius, bool(radius < 1.0))


def identifiability_diagnostic(seq: EventSequence, model: Optional[HawkesModel] = None) -> np.ndarray:
    """Boolean (d, d) matrix: entry [i, j] tells whether some event of ``j`` is
    directly followed (no other dimension in between) by an event of ``i``.

    When ``model`` is given, the event of ``j`` must also see a positive left-limit
    intensity for ``i``.  Diagonal entries carry no requirement and are True.
    """
    d = seq.d
    ok = np.eye(d, dtype=bool)
    positive = None
    if model is not None:
        _check_pair(model, seq)
        positive = np.array([
            K.left_intensities(seq.times, seq.marks, model.mu[i], model.alpha[i], model.beta[i]) > 0
            for i in range(d)
        ])
    run_dim = -1
    run_pos = np.zeros(d, dtype=bool)
    for k, m in enumerate(seq.marks.tolist()):
        if m != run_dim:
            if run_dim >= 0:
                ok[m, run_dim] |= True if positive is None else run_pos[m]
            run_dim = m
            run_pos[:] = False
        if positive is not None:
            run_pos |= positive[:, k]
    return ok
