"""Time-rescaling goodness of fit.

Under the fitted model the compensator increments between consecutive events
of a stream are i.i.d. unit exponentials.  Each of the d dimensions and the
superposed process give one Kolmogorov-Smirnov test.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict
from typing import Sequence, Union

import numpy as np

from .core import EventSequence, HawkesError, HawkesModel, compensator_at_events, _check_pair
from .multitest import benjamini_hochberg

TOTAL = "total"

_TERMS = 100


class TooFewEvents(HawkesError):
    pass


@dataclass
class GofReport:
    """Averaged p-values for the d per-dimension hypotheses and the total one.

    ``ks_stats`` and ``n_intervals`` have d + 1 entries, the last one for the
    total process; ``n_sequences`` counts how many sequences entered each average.
    """

    p: np.ndarray
    p_tot: float
    ks_stats: np.ndarray
    bh_rejected: np.ndarray
    n_intervals: np.ndarray
    n_sequences: np.ndarray
    q: float

    @property
    def all_p(self) -> np.ndarray:
        return np.append(self.p, self.p_tot)

    def mean_p(self) -> float:
        return float(np.mean(self.all_p))

    def to_dict(self) -> dict:
        out = asdict(self)
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in out.items()}

    def ordered_rows(self):
        """(hypothesis, p, BH threshold, rejected) sorted by p, for plotting."""
        names = [f"H{i + 1}" for i in range(self.p.shape[0])] + ["Htot"]
        p = self.all_p
        m = p.shape[0]
        order = np.argsort(p, kind="stable")
        return [
            (names[j], float(p[j]), self.q * (rank + 1) / m, bool(self.bh_rejected[j]))
            for rank, j in enumerate(order)
        ]


def time_rescale(model: HawkesModel, seq: EventSequence, target: Union[int, str] = TOTAL,
                 include_first: bool = False) -> np.ndarray:
    """Compensator increments between consecutive events of ``target``.

    ``target`` is a dimension index or ``TOTAL``.  With ``include_first`` the
    increment from 0 to the first target event is prepended.
    """
    _check_pair(model, seq)
    if target == TOTAL:
        comp = sum(compensator_at_events(model, seq, i) for i in range(model.d))
        points = comp
    else:
        if not isinstance(target, (int, np.integer)) or not 0 <= target < model.d:
            raise HawkesError(f"target {target!r} is neither a dimension index nor TOTAL")
        points = compensator_at_events(model, seq, int(target))[seq.marks == target]
    if points.shape[0] < 2:
        raise TooFewEvents(f"target {target!r} has fewer than 2 events")
    inc = np.diff(points)
    if include_first:
        inc = np.concatenate(([points[0]], inc))
    # round-off can only push an exactly-zero increment slightly negative
    return np.maximum(inc, 0.0)


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the limiting Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    k = np.arange(1, _TERMS + 1)
    if x < 1.18:
        # theta-function form converges fast for small x
        cdf = math.sqrt(2 * math.pi) / x * np.sum(np.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * x * x)))
        return float(min(max(1.0 - cdf, 0.0), 1.0))
    signs = np.where(k % 2 == 1, 1.0, -1.0)
    sf = 2.0 * np.sum(signs * np.exp(-2.0 * k * k * x * x))
    return float(min(max(sf, 0.0), 1.0))


def ks_exp_test(sample) -> tuple[float, float]:
    """Two-sided one-sample KS test against Exp(1): (D_n, p-value)."""
    x = np.sort(np.asarray(sample, dtype=float).reshape(-1))
    n = x.shape[0]
    if n == 0:
        raise HawkesError("KS test needs a nonempty sample")
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise HawkesError("KS sample must be finite and nonnegative")
    cdf = -np.expm1(-x)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    stat = float(max(d_plus, d_minus))
    root = math.sqrt(n)
    return stat, kolmogorov_sf((root + 0.12 + 0.11 / root) * stat)


def sequence_tests(model: HawkesModel, seq: EventSequence, include_first: bool = False):
    """Per-sequence (stats, pvalues, n_intervals) for the d + 1 hypotheses; NaN where skipped."""
    d = model.d
    stats = np.full(d + 1, np.nan)
    pvals = np.full(d + 1, np.nan)
    counts = np.zeros(d + 1, dtype=int)
    for slot, target in enumerate(list(range(d)) + [TOTAL]):
        try:
            inc = time_rescale(model, seq, target, include_first)
        except TooFewEvents as exc:
            warnings.warn(f"skipping hypothesis: {exc}", RuntimeWarning, stacklevel=3)
            continue
        stats[slot], pvals[slot] = ks_exp_test(inc)
        counts[slot] = inc.shape[0]
    return stats, pvals, counts


def gof_report(model: HawkesModel, test_seqs: Sequence[EventSequence], q: float = 0.05,
               include_first: bool = False) -> GofReport:
    """Average the d + 1 KS p-values over independent test sequences.

    The test sequences must not have been used to fit ``model``.
    """
    if isinstance(test_seqs, EventSequence):
        test_seqs = [test_seqs]
    if not test_seqs:
        raise HawkesError("gof_report needs at least one test sequence")
    d = model.d
    all_stats, all_p, n_int = [], [], np.zeros(d + 1, dtype=int)
    for seq in test_seqs:
        stats, pvals, counts = sequence_tests(model, seq, include_first)
        all_stats.append(stats)
        all_p.append(pvals)
        n_int += counts
    all_p = np.array(all_p)
    used = np.sum(~np.isnan(all_p), axis=0)
    if np.all(used == 0):
        raise HawkesError("no test sequence had enough events for any hypothesis")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p_mean = np.nanmean(all_p, axis=0)
        s_mean = np.nanmean(np.array(all_stats), axis=0)
    # a hypothesis with no usable sequence is reported as p = 1 (no evidence)
    p_mean = np.where(used == 0, 1.0, p_mean)
    rejected = benjamini_hochberg(p_mean, q, d + 1)
    return GofReport(
        p=p_mean[:d],
        p_tot=float(p_mean[d]),
        ks_stats=s_mean,
        bh_rejected=rejected,
        n_intervals=n_int,
        n_sequences=used,
        q=float(q),
    )
