"""One-sided Wilcoxon signed-rank test with exact small-sample p-values."""

import math

import numpy as np
from scipy.stats import rankdata

from ..errors import DataError
from .result import StatResult

EXACT_LIMIT = 20


def _exact_p_greater(ranks: np.ndarray, w: float) -> float:
    """P(W' >= w) under random signs, by subset-sum enumeration.

    Average ranks are multiples of one half, so doubling them gives exact
    integers and the distribution of doubled rank sums is a polynomial
    product, equivalent to enumerating all 2^N sign patterns.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    threshold = int(math.ceil(round(2.0 * w, 6)))
    tail = counts[threshold:].sum()
    return float(tail / 2.0 ** len(ranks))


def wilcoxon_one_sided(diffs, group: dict | None = None) -> StatResult:
    """Signed-rank test of the hypothesis that differences are positive.

    Exact zeros are dropped (classical convention) and the effective sample
    size recorded. W sums the ranks of positive differences, with average
    ranks on tied magnitudes. The p-value is exact for N <= 20 and a
    normal approximation with continuity and tie correction above.
    """
    diffs = np.asarray(list(diffs), dtype=np.float64)
    if diffs.size == 0:
        raise DataError("empty difference list")
    if not np.isfinite(diffs).all():
        raise DataError("differences contain non-finite values")
    mean_delta = float(math.fsum(diffs) / diffs.size)
    nonzero = diffs[diffs != 0.0]
    n = int(nonzero.size)
    if n == 0:
        return StatResult(
            test="wilcoxon_one_sided",
            statistic=0.0,
            n=0,
            p_value=1.0,
            mean_delta=mean_delta,
            group=group or {},
            note="n.s.: no non-zero differences",
        )
    ranks = rankdata(np.abs(nonzero), method="average")
    w = float(math.fsum(ranks[nonzero > 0]))
    if n <= EXACT_LIMIT:
        p = _exact_p_greater(ranks, w)
    else:
        mean_w = n * (n + 1) / 4.0
        var_w = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var_w -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
        if var_w <= 0:
            p = 1.0
        else:
            z = (w - mean_w - 0.5) / math.sqrt(var_w)
            p = 0.5 * math.erfc(z / math.sqrt(2.0))
    p = min(1.0, max(p, 5e-324))
    return StatResult(
        test="wilcoxon_one_sided",
        statistic=w,
        n=n,
        p_value=p,
        mean_delta=mean_delta,
        group=group or {},
    )
