"""Compiled per-dimension recursions.

Every routine here works on a single receiving dimension ``i`` and walks the
global event stream once.  Marks are 0-based.  ``lam`` always denotes the
underlying (signed) intensity right after an event, jump included.
"""
import math

import numpy as np
from numba import njit

LOG_GUARD = 1.0 + 1e-15


@njit(cache=True)
def restart(mu, beta, lam, t_k, t_end):
    """First time in [t_k, t_end] where the signed intensity is >= 0."""
    if lam >= 0.0:
        return t_k
    ratio = (mu - lam) / mu
    if ratio < LOG_GUARD:
        ratio = LOG_GUARD
    t_star = t_k + math.log(ratio) / beta
    if t_star > t_end:
        return t_end
    return t_star


@njit(cache=True)
def piece(mu, beta, lam, t_k, t_end, approx):
    """Integral of the intensity over [t_k, t_end] with no event inside."""
    if t_end <= t_k:
        return 0.0
    if approx:
        return mu * (t_end - t_k) + (lam - mu) / beta * (1.0 - math.exp(-beta * (t_end - t_k)))
    t_star = restart(mu, beta, lam, t_k, t_end)
    if t_star >= t_end:
        return 0.0
    return mu * (t_end - t_star) + (lam - mu) / beta * (
        math.exp(-beta * (t_star - t_k)) - math.exp(-beta * (t_end - t_k))
    )


@njit(cache=True)
def dim_pass(times, marks, horizon, i, mu, arow, beta, approx, floor=0.0):
    """Return (sum of log event intensities, compensator at horizon, #bad events).

    An event of ``i`` whose left-limit intensity is <= 0 is counted in the third
    slot.  With ``floor`` > 0, log is continued linearly below ``floor`` (C1
    surrogate used by the optimiser); otherwise bad events add nothing to the
    first slot.
    """
    n = times.shape[0]
    if n == 0:
        return 0.0, mu * horizon, 0
    comp = mu * times[0]
    ev = 0.0
    bad = 0
    if marks[0] == i:
        ev += math.log(mu)
    lam = mu + arow[marks[0]]
    for k in range(1, n):
        t_prev = times[k - 1]
        t_k = times[k]
        comp += piece(mu, beta, lam, t_prev, t_k, approx)
        left = mu + (lam - mu) * math.exp(-beta * (t_k - t_prev))
        if marks[k] == i:
            if left <= 0.0:
                bad += 1
            if floor > 0.0 and left < floor:
                ev += math.log(floor) + (left - floor) / floor
            elif left > 0.0:
                ev += math.log(left)
        lam = left + arow[marks[k]]
    comp += piece(mu, beta, lam, times[n - 1], horizon, approx)
    return ev, comp, bad


@njit(cache=True)
def state_at(times, marks, mu, arow, beta, t):
    """(index of last event <= t, signed intensity right after it).

    Index is -1 when no event precedes ``t``.
    """
    lam = mu
    last = -1
    for k in range(times.shape[0]):
        if times[k] > t:
            break
        if k > 0:
            lam = mu + (lam - mu) * math.exp(-beta * (times[k] - times[k - 1]))
        lam += arow[marks[k]]
        last = k
    return last, lam


@njit(cache=True)
def underlying_at(times, marks, mu, arow, beta, t):
    last, lam = state_at(times, marks, mu, arow, beta, t)
    if last < 0:
        return mu
    return mu + (lam - mu) * math.exp(-beta * (t - times[last]))


@njit(cache=True)
def conditional_at(times, marks, mu, arow, beta, t, horizon):
    """Intensity read off the restart-time decomposition, not clamped directly."""
    last, lam = state_at(times, marks, mu, arow, beta, t)
    if last < 0:
        return mu
    n = times.shape[0]
    t_next = times[last + 1] if last + 1 < n else max(horizon, t)
    t_star = restart(mu, beta, lam, times[last], t_next)
    if t < t_star:
        return 0.0
    value = mu + (lam - mu) * math.exp(-beta * (t - times[last]))
    return value if value > 0.0 else 0.0


@njit(cache=True)
def compensator_at(times, marks, mu, arow, beta, t, approx):
    n = times.shape[0]
    if n == 0 or t < times[0]:
        return mu * t
    comp = mu * times[0]
    lam = mu + arow[marks[0]]
    last = 0
    for k in range(1, n):
        if times[k] > t:
            break
        comp += piece(mu, beta, lam, times[k - 1], times[k], approx)
        lam = mu + (lam - mu) * math.exp(-beta * (times[k] - times[k - 1])) + arow[marks[k]]
        last = k
    comp += piece(mu, beta, lam, times[last], t, approx)
    return comp


@njit(cache=True)
def compensator_at_events(times, marks, mu, arow, beta):
    """Compensator evaluated at every global event time."""
    n = times.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    comp = mu * times[0]
    out[0] = comp
    lam = mu + arow[marks[0]]
    for k in range(1, n):
        comp += piece(mu, beta, lam, times[k - 1], times[k], False)
        out[k] = comp
        lam = mu + (lam - mu) * math.exp(-beta * (times[k] - times[k - 1])) + arow[marks[k]]
    return out


@njit(cache=True)
def left_intensities(times, marks, mu, arow, beta):
    """Signed intensity of one dimension just before every global event."""
    n = times.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    out[0] = mu
    lam = mu + arow[marks[0]]
    for k in range(1, n):
        left = mu + (lam - mu) * math.exp(-beta * (times[k] - times[k - 1]))
        out[k] = left
        lam = left + arow[marks[k]]
    return out
