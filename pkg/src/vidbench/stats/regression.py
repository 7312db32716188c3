"""Ordinary least squares over severity-indexed metric curves."""

import math

from ..errors import DataError
from .result import StatResult


def degradation_slope(curve) -> tuple:
    """OLS slope and R^2 of value against severity on its native scale.

    A zero-variance response gets R^2 := 0 by convention (the fit explains
    nothing because there is nothing to explain); callers can detect the
    case through ``slope_result``'s note field.
    """
    points = [(float(s), float(v)) for s, v in curve]
    if len(points) < 2:
        raise DataError("need at least two points for a slope")
    s = [p[0] for p in points]
    v = [p[1] for p in points]
    n = len(points)
    s_mean = math.fsum(s) / n
    v_mean = math.fsum(v) / n
    ss_s = math.fsum((a - s_mean) ** 2 for a in s)
    if ss_s == 0.0:
        raise DataError("all severities are equal; slope undefined")
    cov = math.fsum((a - s_mean) * (b - v_mean) for a, b in zip(s, v))
    slope = cov / ss_s
    intercept = v_mean - slope * s_mean
    ss_tot = math.fsum((b - v_mean) ** 2 for b in v)
    if ss_tot == 0.0:
        return slope, 0.0
    ss_res = math.fsum((b - (intercept + slope * a)) ** 2 for a, b in zip(s, v))
    return slope, max(0.0, min(1.0, 1.0 - ss_res / ss_tot))


def slope_result(curve, group: dict | None = None) -> StatResult:
    points = list(curve)
    slope, r2 = degradation_slope(points)
    values = {float(v) for _, v in points}
    note = "degenerate: zero-variance response" if len(values) == 1 else ""
    return StatResult(
        test="ols_slope",
        statistic=slope,
        n=len(points),
        r_squared=r2,
        group=group or {},
        note=note,
    )
