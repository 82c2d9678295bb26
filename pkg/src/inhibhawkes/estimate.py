"""Maximum likelihood fitting and interaction-support selection.

The log-likelihood splits into one term per receiving dimension, each
depending only on (mu_i, alpha_i., beta_i), so every dimension is optimised
on its own with L-BFGS-B.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .core import (
    EventSequence,
    HawkesError,
    HawkesModel,
    NumericalError,
    dimension_loglik,
    is_feasible,
    surrogate_loglik,
)
from .gof import gof_report
from .multitest import benjamini_hochberg

log = logging.getLogger(__name__)

OBJECTIVES = ("exact", "approx")
DEFAULT_EPS_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class FitConfig:
    """Optimiser settings.

    ``mu_max=None`` means 10 * max_i N^i / T computed from the data.  Initial
    points are mu_i ~ U(0.5 r_i, 2 r_i) with r_i the empirical rate,
    alpha_ij ~ U(-1, 1), beta_i ~ U(0.5, 5).
    """

    objective: str = "exact"
    restarts: int = 5
    mu_min: float = 1e-8
    mu_max: Optional[float] = None
    alpha_max: float = 20.0
    beta_min: float = 1e-8
    beta_max: float = 50.0
    ftol: float = 1e-12
    gtol: float = 1e-7
    max_iter: int = 1000
    rel_step: float = 1e-6
    surrogate_floor: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise HawkesError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.restarts < 1:
            raise HawkesError("restarts must be >= 1")
        if not (0 < self.mu_min and 0 < self.alpha_max and 0 < self.beta_min < self.beta_max):
            raise HawkesError("invalid bounds")
        if self.mu_max is not None and not self.mu_min < self.mu_max:
            raise HawkesError("mu_max must exceed mu_min")
        for v in (self.mu_max, self.alpha_max, self.beta_max):
            if v is not None and not math.isfinite(v):
                raise HawkesError("bounds must be finite")


@dataclass
class FitResult:
    model: HawkesModel
    loglik: float
    converged: bool
    n_evals: int
    per_dimension_loglik: np.ndarray
    dimension_converged: np.ndarray = field(default=None)
    objective: str = "exact"

    def to_dict(self) -> dict:
        return {
            "loglik": self.loglik,
            "per_dimension_loglik": self.per_dimension_loglik.tolist(),
            "converged": self.converged,
            "dimension_converged": [bool(c) for c in self.dimension_converged],
            "n_evals": self.n_evals,
            "objective": self.objective,
        }


@dataclass
class SupportSelection:
    """Selected support (True = interaction kept) and the model refitted on it."""

    support: np.ndarray
    method: str
    level: float
    refit: Optional[FitResult]
    pvalues: Optional[np.ndarray] = None
    intervals: Optional[np.ndarray] = None

    def signs(self) -> np.ndarray:
        """-1/0/+1 matrix of the refitted interactions (heatmap input)."""
        source = self.refit.model.alpha if self.refit is not None else None
        if source is None:
            return self.support.astype(int)
        return (np.sign(source) * self.support).astype(int)


def _as_list(seqs) -> list[EventSequence]:
    if isinstance(seqs, EventSequence):
        seqs = [seqs]
    seqs = list(seqs)
    if not seqs:
        raise HawkesError("at least one event sequence is required")
    d = seqs[0].d
    for s in seqs:
        if not isinstance(s, EventSequence):
            raise HawkesError(f"expected EventSequence, got {type(s).__name__}")
        if s.d != d:
            raise HawkesError(f"dimension mismatch across sequences: {d} vs {s.d}")
    return seqs


def _rates(seqs):
    counts = sum(s.counts() for s in seqs)
    total_time = sum(s.horizon for s in seqs)
    return counts / total_time, int(counts.sum())


class _DimensionObjective:
    """Negative per-dimension log-likelihood (pooled over sequences) per event.

    ``floor`` > 0 selects the C1 surrogate, 0 the exact objective.
    """

    def __init__(self, seqs, i, approx, free, template, scale, floor=0.0):
        self.seqs = seqs
        self.i = i
        self.approx = approx
        self.free = free
        self.template = template
        self.scale = scale
        self.floor = floor
        self.n_evals = 0

    def theta(self, x):
        th = self.template.copy()
        th[self.free] = x
        return th

    def loglik(self, x):
        self.n_evals += 1
        th = self.theta(x)
        total = 0.0
        for s in self.seqs:
            if self.floor > 0:
                total += surrogate_loglik(th, s, self.i, self.floor, self.approx)
            else:
                total += dimension_loglik(th, s, self.i, self.approx)
        return total

    def __call__(self, x):
        return -self.loglik(x) / self.scale


def _fd_gradient(f, x, f0, lower, upper, rel_step):
    """Central differences, one-sided where a bound or the infeasible region is hit."""
    g = np.zeros_like(x)
    for k in range(x.shape[0]):
        h = rel_step * max(abs(x[k]), 1.0)
        up = x.copy()
        dn = x.copy()
        up[k] = min(x[k] + h, upper[k])
        dn[k] = max(x[k] - h, lower[k])
        fu = f(up) if up[k] != x[k] else None
        fd = f(dn) if dn[k] != x[k] else None
        ok_u = fu is not None and is_feasible(-fu)
        ok_d = fd is not None and is_feasible(-fd)
        if ok_u and ok_d:
            g[k] = (fu - fd) / (up[k] - dn[k])
        elif ok_u:
            g[k] = (fu - f0) / (up[k] - x[k])
        elif ok_d:
            g[k] = (f0 - fd) / (x[k] - dn[k])
    return g


def _fit_dimension(seqs, i, config, support_row, init_theta, rng, mu_max, rate):
    d = seqs[0].d
    free = np.concatenate(([0], 1 + np.nonzero(support_row)[0], [d + 1]))
    template = np.zeros(d + 2)
    lower_full = np.concatenate(([config.mu_min], np.full(d, -config.alpha_max), [config.beta_min]))
    upper_full = np.concatenate(([mu_max], np.full(d, config.alpha_max), [config.beta_max]))
    lower, upper = lower_full[free], upper_full[free]
    n_i = max(sum(int(s.counts()[i]) for s in seqs), 1)
    obj = _DimensionObjective(seqs, i, config.objective == "approx", free, template, n_i)

    # decays are weakly identified, so starts spread them log-uniformly over the box
    log_beta = np.log([max(config.beta_min, 0.1), min(config.beta_max, 20.0)])

    def draw():
        r = max(rate, config.mu_min)
        beta = np.exp(rng.uniform(*log_beta))
        return np.concatenate(([rng.uniform(0.5 * r, 2.0 * r)], rng.uniform(-1.0, 1.0, d), [beta]))

    starts = []
    if init_theta is not None:
        starts.append(np.asarray(init_theta, dtype=float))
    while len(starts) < config.restarts:
        starts.append(draw())

    exact = _DimensionObjective(seqs, i, obj.approx, free, template, n_i)
    # the surrogate floor is relative to the empirical rate of the dimension
    obj.floor = config.surrogate_floor * max(rate, config.mu_min)
    options = {"maxiter": config.max_iter, "ftol": config.ftol, "gtol": config.gtol}
    bounds = list(zip(lower, upper))

    def run(f, x0):
        def jac(x):
            return _fd_gradient(f, x, f(x), lower, upper, config.rel_step)
        return optimize.minimize(f, x0, jac=jac, method="L-BFGS-B", bounds=bounds, options=options)

    best = None
    for th0 in starts:
        x0 = np.clip(th0[free], lower, upper)
        # shrink interactions towards 0 until the start is feasible; alpha = 0 always is
        for _ in range(60):
            if is_feasible(exact.loglik(x0)):
                break
            x0[1:-1] *= 0.5
        else:
            x0[1:-1] = 0.0
        x1 = run(obj, x0).x if obj.floor > 0 else x0
        # polish on the exact objective; fall back to the start if the surrogate
        # optimum is infeasible for it
        if not is_feasible(exact.loglik(x1)):
            x1 = x0
        res = run(exact, x1)
        value = -res.fun * exact.scale
        if not is_feasible(value):
            continue
        if best is None or value > best[0]:
            best = (value, res.x.copy(), bool(res.success))
    if best is None:
        raise NumericalError(
            f"all {len(starts)} restarts ended infeasible for dimension {i} "
            f"({n_i} events); try other bounds or a different seed"
        )
    value, x, success = best
    return obj.theta(x), value, success, obj.n_evals + exact.n_evals


def fit(seqs, config: FitConfig = FitConfig(), support=None, init: Optional[HawkesModel] = None) -> FitResult:
    """Maximise the pooled log-likelihood of one or more sequences.

    ``support`` is a boolean (d, d) mask; interactions outside it are held at
    0.  ``init`` is used as the first start (others are random), which makes
    the result at least as good as ``init`` restricted to the support.
    """
    seqs = _as_list(seqs)
    d = seqs[0].d
    support = np.ones((d, d), dtype=bool) if support is None else np.asarray(support, dtype=bool)
    if support.shape != (d, d):
        raise HawkesError(f"support must be ({d}, {d})")
    if init is not None and init.d != d:
        raise HawkesError("init model has the wrong dimension")
    rates, _ = _rates(seqs)
    mu_max = config.mu_max if config.mu_max is not None else 10.0 * max(rates.max(), config.mu_min * 10)
    blocks, per_dim, conv, n_evals = [], np.zeros(d), np.zeros(d, dtype=bool), 0
    seed_seq = np.random.SeedSequence(config.seed)
    for i, child in enumerate(seed_seq.spawn(d)):
        rng = np.random.default_rng(child)
        init_theta = None
        if init is not None:
            init_theta = init.theta(i)
            init_theta[1:-1] = np.where(support[i], init_theta[1:-1], 0.0)
        theta, value, ok, evals = _fit_dimension(seqs, i, config, support[i], init_theta, rng, mu_max, rates[i])
        blocks.append(theta)
        per_dim[i] = value
        conv[i] = ok
        n_evals += evals
    model = HawkesModel.from_blocks(blocks)
    return FitResult(
        model=model,
        loglik=float(per_dim.sum()),
        converged=bool(conv.all()),
        n_evals=n_evals,
        per_dimension_loglik=per_dim,
        dimension_converged=conv,
        objective=config.objective,
    )


def _zeroed(model: HawkesModel, support) -> HawkesModel:
    return HawkesModel(model.mu, np.where(support, model.alpha, 0.0), model.beta)


def threshold_support(alpha, epsilon, beta=None) -> np.ndarray:
    """Cumulative-mass rule: drop the smallest |alpha| while their running sum is < eps * total.

    With ``beta`` the rule is applied to |alpha_ij / beta_i| instead.
    """
    if not 0 < epsilon < 1:
        raise HawkesError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    a = np.abs(np.asarray(alpha, dtype=float))
    if beta is not None:
        a = a / np.asarray(beta, dtype=float)[:, None]
    flat = a.ravel()
    order = np.argsort(flat, kind="stable")
    cum = np.cumsum(flat[order])
    keep = np.ones(flat.shape[0], dtype=bool)
    keep[order[cum < epsilon * cum[-1]]] = False
    return keep.reshape(a.shape)


def threshold_select(fit_result: FitResult, seqs, epsilon: float, config: FitConfig = FitConfig(),
                     use_ratio: bool = False, refit: bool = True) -> SupportSelection:
    """MLE-epsilon: threshold the fitted interactions, then refit on the kept support."""
    model = fit_result.model
    support = threshold_support(model.alpha, epsilon, model.beta if use_ratio else None)
    result = fit(seqs, replace(config, objective="exact"), support=support, init=model) if refit else None
    return SupportSelection(support=support, method="mle_eps", level=float(epsilon), refit=result)


def epsilon_sweep(fits: Sequence[FitResult], train_seqs, test_seqs, candidate_eps,
                  config: FitConfig = FitConfig(), q: float = 0.05, use_ratio: bool = False):
    """Mean goodness-of-fit p-value for every candidate epsilon.

    ``train_seqs[r]`` (a sequence or list of sequences) is the data ``fits[r]``
    was fitted on.  Returns (scores, selections) with ``selections[eps][r]``.
    Refits are shared between epsilons that give the same support.
    """
    if not candidate_eps:
        raise HawkesError("candidate_eps must be nonempty")
    if len(fits) != len(train_seqs):
        raise HawkesError("one training set per fit is required")
    test_seqs = _as_list(test_seqs)
    cache = {}
    scores, selections = {}, {}
    for eps in candidate_eps:
        p_means = []
        selections[eps] = []
        for r, (fr, train) in enumerate(zip(fits, train_seqs)):
            model = fr.model
            support = threshold_support(model.alpha, eps, model.beta if use_ratio else None)
            key = (r, support.tobytes())
            if key not in cache:
                refit = fit(train, replace(config, objective="exact"), support=support, init=model)
                cache[key] = (refit, gof_report(refit.model, test_seqs, q).mean_p())
            refit, mp = cache[key]
            p_means.append(mp)
            selections[eps].append(SupportSelection(support, "mle_eps", float(eps), refit))
        scores[eps] = float(np.mean(p_means))
        log.debug("eps=%s mean p=%.4f", eps, scores[eps])
    return scores, selections


def choose_epsilon(fits, train_seqs, test_seqs, candidate_eps=DEFAULT_EPS_GRID,
                   config: FitConfig = FitConfig(), q: float = 0.05, use_ratio: bool = False) -> float:
    """Epsilon maximising the mean of all p-values on the test sequences; ties go to the larger one."""
    scores, _ = epsilon_sweep(fits, train_seqs, test_seqs, candidate_eps, config, q, use_ratio)
    return max(scores, key=lambda e: (scores[e], e))


def interval_pvalues(estimates, gamma: float, kind: str):
    """Intervals and two-sided p-values for H0: alpha_ij = 0 from n per-realisation estimates.

    ``estimates`` has shape (n, d, d).  Returns (lower, upper, pvalues).
    """
    A = np.asarray(estimates, dtype=float)
    n = A.shape[0]
    if not 0 < gamma < 1:
        raise HawkesError(f"gamma must lie in (0, 1), got {gamma!r}")
    if n < 2:
        raise HawkesError(
            "confidence intervals need at least 2 realisations; "
            "build more from one long record with resample_concatenate"
        )
    if kind == "student":
        mean = A.mean(axis=0)
        sd = A.std(axis=0, ddof=1)
        tq = stats.t.ppf(1 - gamma / 2, n - 1)
        lower, upper = mean - tq * sd, mean + tq * sd
        with np.errstate(divide="ignore", invalid="ignore"):
            tstat = np.abs(mean) * math.sqrt(n) / sd
        p = 2 * stats.t.sf(tstat, n - 1)
        p = np.where(sd > 0, p, np.where(mean == 0, 1.0, 0.0))
    elif kind == "empirical":
        lo_rank = math.floor(gamma / 2 * n)
        hi_rank = math.ceil((1 - gamma / 2) * n)
        if lo_rank < 1 or hi_rank > n:
            raise HawkesError(
                f"n={n} realisations are too few for empirical quantiles at gamma={gamma}; "
                f"need n >= {math.ceil(2 / gamma)}"
            )
        srt = np.sort(A, axis=0)
        lower, upper = srt[lo_rank - 1], srt[hi_rank - 1]
        below = np.sum(A <= 0, axis=0)
        above = np.sum(A >= 0, axis=0)
        p = np.minimum(1.0, 2 * np.minimum(below, above) / n)
    else:
        raise HawkesError(f"kind must be 'student' or 'empirical', got {kind!r}")
    return lower, upper, p


def confidence_select(fits: Sequence[FitResult], seqs=None, gamma: float = 0.1, kind: str = "student",
                      q: Optional[float] = None, config: FitConfig = FitConfig()) -> SupportSelection:
    """CfE / CfSt: keep alpha_ij when its interval excludes 0 and BH (family d^2) rejects H0.

    ``q`` defaults to ``gamma``.  With ``seqs`` the kept support is refitted on
    all of them pooled, starting from the averaged estimates.
    """
    fits = list(fits)
    if not fits:
        raise HawkesError("confidence_select needs fitted realisations")
    A = np.array([f.model.alpha for f in fits])
    d = A.shape[1]
    lower, upper, p = interval_pvalues(A, gamma, kind)
    excludes_zero = (lower > 0) | (upper < 0)
    rejected = benjamini_hochberg(p.ravel(), gamma if q is None else q, d * d).reshape(d, d)
    support = excludes_zero & rejected
    refit = None
    if seqs is not None:
        mean_model = HawkesModel(
            np.mean([f.model.mu for f in fits], axis=0),
            A.mean(axis=0),
            np.mean([f.model.beta for f in fits], axis=0),
        )
        refit = fit(seqs, replace(config, objective="exact"), support=support, init=mean_model)
    method = "cfst" if kind == "student" else "cfe"
    return SupportSelection(support, method, float(gamma), refit, pvalues=p,
                            intervals=np.stack([lower, upper]))


def resample_concatenate(realizations: Sequence[EventSequence], k: int, reps: int, seed=0,
                         window: Optional[float] = None) -> list[EventSequence]:
    """Glue ``k`` randomly drawn realisations end to end, ``reps`` times.

    All realisations must share the window length ``window`` (default: their
    common horizon).  Draws are without replacement and order matters.
    """
    realizations = _as_list(realizations)
    if not 1 <= k <= len(realizations):
        raise HawkesError(f"k={k} must lie between 1 and the {len(realizations)} available realisations")
    if reps < 1:
        raise HawkesError("reps must be >= 1")
    if window is None:
        horizons = np.array([r.horizon for r in realizations])
        if not np.allclose(horizons, horizons[0], rtol=1e-12, atol=0):
            raise HawkesError("realisations have different windows; pass window explicitly")
        window = float(horizons[0])
    elif any(r.horizon > window for r in realizations):
        raise HawkesError("a realisation extends beyond the given window")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(reps):
        picks = rng.choice(len(realizations), size=k, replace=False)
        times = np.concatenate([realizations[j].times + r * window for r, j in enumerate(picks)])
        marks = np.concatenate([realizations[j].marks for j in picks])
        out.append(EventSequence(times, marks, horizon=k * window, d=realizations[0].d))
    return out


def split_windows(seq: EventSequence, window: float) -> list[EventSequence]:
    """Cut one long record into consecutive windows of length ``window``, each shifted to start at 0.

    A trailing partial window is dropped; windows without events are kept.
    """
    if not window > 0:
        raise HawkesError("window must be > 0")
    n_windows = int(seq.horizon // window)
    if n_windows < 1:
        raise HawkesError(f"record of length {seq.horizon} is shorter than one window of {window}")
    out = []
    for w in range(n_windows):
        lo, hi = w * window, (w + 1) * window
        sel = (seq.times > lo) & (seq.times <= hi)
        out.append(EventSequence(seq.times[sel] - lo, seq.marks[sel], horizon=window, d=seq.d))
    return out


def relative_squared_errors(estimate: HawkesModel, truth: HawkesModel) -> dict:
    """||est_g - true_g||^2 / ||true_g||^2 for the mu, alpha and beta groups."""
    out = {}
    for name in ("mu", "alpha", "beta"):
        e = np.ravel(getattr(estimate, name))
        t = np.ravel(getattr(truth, name))
        out[name] = float(np.sum((e - t) ** 2) / np.sum(t**2))
    return out
