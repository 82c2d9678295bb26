"""Slow, direct reference implementations used to check the fast code paths.

Nothing here calls into the package's recursions: intensities are explicit
double sums, integrals come from adaptive quadrature, roots from bisection.
"""
import math

import numpy as np
from scipy import integrate, optimize

from inhibhawkes import EventSequence, HawkesModel, SimConfig, simulate


def underlying(model, seq, i, t, strict=False):
    """mu_i + sum over events at or before t (before t if ``strict``) of alpha e^{-beta (t - T)}."""
    mask = seq.times < t if strict else seq.times <= t
    tt = seq.times[mask]
    a = model.alpha[i, seq.marks[mask]]
    return float(model.mu[i] + np.sum(a * np.exp(-model.beta[i] * (t - tt))))


def _pieces(seq, t):
    edges = np.concatenate([[0.0], seq.times[seq.times < t], [t]])
    return edges[:-1], edges[1:]


def _positive_part_integral(f, lo, hi, epsrel):
    """Integral of max(0, f) over [lo, hi] where f is monotone (one exponential term)."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo >= 0 and f_hi >= 0:
        pts = (lo, hi)
    elif f_lo < 0 and f_hi < 0:
        return 0.0
    else:
        root = optimize.bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        pts = (root, hi) if f_lo < 0 else (lo, root)
    value, _ = integrate.quad(lambda u: max(f(u), 0.0), *pts, epsabs=0.0, epsrel=epsrel, limit=200)
    return value


def compensator(model, seq, i, t, epsrel=1e-13, signed=False):
    """Quadrature of max(0, lambda_i*) (or of lambda_i* itself) over [0, t], piece by piece."""
    total = 0.0
    for lo, hi in zip(*_pieces(seq, t)):
        if hi <= lo:
            continue
        mask = seq.times <= lo
        tt = seq.times[mask]
        a = model.alpha[i, seq.marks[mask]]
        mu, beta = model.mu[i], model.beta[i]

        def f(u, tt=tt, a=a, mu=mu, beta=beta):
            return mu + float(np.dot(a, np.exp(-beta * (u - tt))))

        if signed:
            total += integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)[0]
        else:
            total += _positive_part_integral(f, lo, hi, epsrel)
    return total


def loglik(model, seq, signed=False):
    """Naive O(N^2) log-likelihood; None when some event sees a nonpositive intensity."""
    total = 0.0
    for i in range(model.d):
        for t in seq.times[seq.marks == i]:
            left = underlying(model, seq, i, t, strict=True)
            if left <= 0:
                return None
            total += math.log(left)
        total -= compensator(model, seq, i, seq.horizon, signed=signed)
    return total


def loglik_gradient(model, seq, i):
    """d loglik^i / d(mu_i, alpha_i.) by differentiating under the integral.

    The boundary terms from the moving restart times vanish because the
    integrand is zero there.
    """
    d = model.d
    grad = np.zeros(1 + d)
    mu, beta = model.mu[i], model.beta[i]
    for t in seq.times[seq.marks == i]:
        left = underlying(model, seq, i, t, strict=True)
        prev = seq.times < t
        basis = np.zeros(d)
        np.add.at(basis, seq.marks[prev], np.exp(-beta * (t - seq.times[prev])))
        grad += np.concatenate([[1.0], basis]) / left
    for lo, hi in zip(*_pieces(seq, seq.horizon)):
        if hi <= lo:
            continue
        mask = seq.times <= lo
        tt, mk = seq.times[mask], seq.marks[mask]
        a = model.alpha[i, mk]

        def f(u, tt=tt, a=a):
            return mu + float(np.dot(a, np.exp(-beta * (u - tt))))

        f_lo, f_hi = f(lo), f(hi)
        if f_lo < 0 and f_hi < 0:
            continue
        if f_lo < 0 or f_hi < 0:
            root = optimize.bisect(f, lo, hi, xtol=1e-15, maxiter=500)
            lo, hi = (root, hi) if f_lo < 0 else (lo, root)
        grad[0] -= hi - lo
        for j in range(d):
            sel = mk == j
            if sel.any():
                w = np.sum(np.exp(-beta * (lo - tt[sel])))
                grad[1 + j] -= w * (1 - math.exp(-beta * (hi - lo))) / beta
    return grad


def restart_root(mu, beta, lam, t_k, t_next):
    f = lambda u: mu + (lam - mu) * math.exp(-beta * (u - t_k))
    if lam >= 0:
        return t_k
    if f(t_next) < 0:
        return t_next
    return optimize.bisect(f, t_k, t_next, xtol=1e-14, maxiter=500)


def spectral_radius_2x2(model):
    S = np.maximum(model.alpha, 0.0) / model.beta[:, None]
    tr, det = S[0, 0] + S[1, 1], S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    disc = tr * tr - 4 * det
    if disc >= 0:
        return max(abs((tr + math.sqrt(disc)) / 2), abs((tr - math.sqrt(disc)) / 2))
    return math.sqrt(det)


def identifiability_scan(seq, model=None):
    d = seq.d
    ok = np.eye(d, dtype=bool)
    marks = seq.marks
    n = len(seq)
    for a in range(n):
        for b in range(a + 1, n):
            j, i = marks[a], marks[b]
            if i == j:
                continue
            if not np.all(marks[a:b] == j):
                break
            if model is None or underlying(model, seq, i, seq.times[a], strict=True) > 0:
                ok[i, j] = True
            break
    return ok


def random_model(rng, d=None, alpha_scale=2.0, stable=True):
    d = d or int(rng.integers(1, 5))
    mu = rng.uniform(0.3, 2.0, d)
    beta = rng.uniform(0.5, 5.0, d)
    alpha = rng.uniform(-alpha_scale, alpha_scale, (d, d))
    if stable:
        S = np.maximum(alpha, 0) / beta[:, None]
        rho = np.max(np.abs(np.linalg.eigvals(S))) if S.any() else 0.0
        if rho >= 0.8:
            alpha = np.where(alpha > 0, alpha * 0.8 / rho, alpha)
    return HawkesModel(mu, alpha, beta)


def random_instance(rng, max_events=200, d=None):
    model = random_model(rng, d)
    n = int(rng.integers(1, max_events + 1))
    seq = simulate(SimConfig(model, n_events=n, seed=int(rng.integers(2**32))))
    horizon = seq.horizon + float(rng.exponential(1.0))
    return model, EventSequence(seq.times, seq.marks, horizon=horizon, d=model.d)
