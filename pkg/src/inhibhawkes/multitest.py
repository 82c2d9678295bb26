import math

import numpy as np

from .core import HawkesError


def benjamini_hochberg(pvalues, q, m=None):
    """Benjamini-Hochberg step-up rejections, in the input order.

    ``m`` is the family size and may exceed ``len(pvalues)``.  K is the largest
    rank with ``p_(K) < q K / m``; every p-value <= ``p_(K)`` is rejected.
    """
    p = np.asarray(pvalues, dtype=float).reshape(-1)
    if not (isinstance(q, (int, float, np.floating)) and 0 <= q <= 1) or math.isnan(q):
        raise HawkesError(f"q must lie in [0, 1], got {q!r}")
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise HawkesError("p-values must lie in [0, 1]")
    m = p.size if m is None else int(m)
    if m < p.size:
        raise HawkesError("family size m cannot be smaller than the number of p-values")
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    ordered = np.sort(p)
    ranks = np.arange(1, p.size + 1)
    passing = np.nonzero(ordered < q * ranks / m)[0]
    if passing.size == 0:
        return np.zeros(p.size, dtype=bool)
    cutoff = ordered[passing[-1]]
    return p <= cutoff
