"""Change-over-time features from a feature's weekly value series.

For a series over weeks 1..n: the overall OLS slope; slopes over weeks 1..m
and m..n (week m belongs to both halves); and a two-segment piecewise fit.
Candidate breakpoints b in {2..n-2} split the weeks into 1..b and b..n (the
shared-week convention, matching the halves above); each segment gets an
independent OLS line, and the winning b minimizes the Gaussian BIC
n*ln(RSS/n) + k*ln(n) with k = 5, ties to the smallest b.

Missing weeks are dropped from every fit, never imputed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateFit, InsufficientData
from .numerics import linear_fit

log = logging.getLogger(__name__)

CHANGE_FIELDS = (
    "slope",
    "slope_first_half",
    "slope_second_half",
    "breakpoint",
    "slope_before",
    "slope_after",
)

BIC_K = 5  # two slopes, two intercepts, one noise variance
_RSS_FLOOR = 1e-300


@dataclass(frozen=True)
class WeeklySeries:
    feature: str
    values: tuple[float | None, ...]  # index 0 = week 1; None = missing week
    midpoint: int  # m, from the study configuration

    @property
    def n_weeks(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ChangeFeatures:
    slope: float | None = None
    slope_first_half: float | None = None
    slope_second_half: float | None = None
    breakpoint: float | None = None
    slope_before: float | None = None
    slope_after: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {f: getattr(self, f) for f in CHANGE_FIELDS}


def _observed(values: Sequence[float | None], lo: int, hi: int) -> tuple[list[float], list[float]]:
    """Non-missing (week, value) pairs for weeks lo..hi inclusive (1-based)."""
    xs: list[float] = []
    ys: list[float] = []
    for week in range(lo, hi + 1):
        v = values[week - 1]
        if v is not None:
            xs.append(float(week))
            ys.append(float(v))
    return xs, ys


def _slope_or_none(values: Sequence[float | None], lo: int, hi: int) -> tuple[float, float] | None:
    xs, ys = _observed(values, lo, hi)
    if len(xs) < 2:
        return None
    try:
        slope, _, rss = linear_fit(xs, ys)
    except (DegenerateFit, InsufficientData):
        return None
    return slope, rss


def change_features(series: WeeklySeries) -> ChangeFeatures:
    """All change features for one weekly series; unattainable ones stay None."""
    n = series.n_weeks
    values = series.values
    m = series.midpoint

    out: dict[str, float | None] = {f: None for f in CHANGE_FIELDS}

    fit = _slope_or_none(values, 1, n)
    if fit is not None:
        out["slope"] = fit[0]
    if 1 <= m <= n:
        first = _slope_or_none(values, 1, m)
        if first is not None:
            out["slope_first_half"] = first[0]
        second = _slope_or_none(values, m, n)
        if second is not None:
            out["slope_second_half"] = second[0]

    n_obs_total = len(_observed(values, 1, n)[0])
    if n >= 4 and n_obs_total >= 4:
        best = None  # (bic, b, slope_before, slope_after)
        for b in range(2, n - 1):
            left = _slope_or_none(values, 1, b)
            right = _slope_or_none(values, b, n)
            if left is None or right is None:
                continue
            rss = left[1] + right[1]
            bic = n_obs_total * math.log(max(rss / n_obs_total, _RSS_FLOOR)) + BIC_K * math.log(n_obs_total)
            if best is None or bic < best[0] - 1e-12:
                best = (bic, b, left[0], right[0])
        if best is not None:
            out["breakpoint"] = float(best[1])
            out["slope_before"] = best[2]
            out["slope_after"] = best[3]
    return ChangeFeatures(**out)
