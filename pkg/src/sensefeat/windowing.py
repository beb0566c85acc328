"""Partition a study into time slices and assign records to them.

Epochs are fixed daily windows in participant-local civil time: morning
[06:00, 12:00), afternoon [12:00, 18:00), evening [18:00, 24:00), night
[00:00, 06:00), plus all_day. Granularities group whole days: daily, weekly
(ISO weeks, Monday start), weekdays (Mon-Fri per week), weekends (Sat-Sun per
week), half_term (split by the configured date), and full_term. A slice is
the cross product cell: concrete UTC [start, end) intervals, half-open, so
the four named epochs tile each day with no loss or double counting.

Epoch boundaries are computed per local day and converted to UTC, so DST days
of 23 or 25 hours are sliced as the clock shows them.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Sequence

from .config import StudyConfig
from .errors import ConfigError

EPOCHS = ("morning", "afternoon", "evening", "night", "all_day")
EPOCH_HOURS = {
    "morning": (6, 12),
    "afternoon": (12, 18),
    "evening": (18, 24),
    "night": (0, 6),
    "all_day": (0, 24),
}
GRANULARITIES = ("daily", "weekly", "weekdays", "weekends", "half_term", "full_term")


@dataclass(frozen=True)
class TimeSlice:
    epoch: str
    granularity: str
    index: int
    bounds: tuple[tuple[int, int], ...]  # UTC ms [start, end) intervals, ascending

    @property
    def slice_id(self) -> str:
        return f"{self.epoch}:{self.granularity}:{self.index:03d}"

    @property
    def span_ms(self) -> int:
        return sum(e - s for s, e in self.bounds)

    @property
    def minutes(self) -> float:
        return self.span_ms / 60_000.0

    def contains(self, ts: int) -> bool:
        for s, e in self.bounds:
            if s <= ts < e:
                return True
        return False


def _day_boundary_ms(d: date, hour: int, config: StudyConfig) -> int:
    """UTC ms of local `hour:00` on day `d` (hour 24 = next midnight)."""
    if hour == 24:
        d = d + timedelta(days=1)
        hour = 0
    local = datetime(d.year, d.month, d.day, hour, tzinfo=config.tzinfo)
    return int(local.timestamp() * 1000)


def _granularity_days(config: StudyConfig) -> dict[str, list[tuple[int, list[date]]]]:
    """Instance list per granularity: (1-based index, member days)."""
    days = config.days()
    by_week: dict[tuple[int, int], list[date]] = {}
    for d in days:
        iso = d.isocalendar()
        by_week.setdefault((iso[0], iso[1]), []).append(d)
    week_keys = config.week_keys()

    out: dict[str, list[tuple[int, list[date]]]] = {
        "daily": [(i + 1, [d]) for i, d in enumerate(days)],
        "weekly": [(i + 1, by_week[k]) for i, k in enumerate(week_keys)],
        "weekdays": [
            (i + 1, [d for d in by_week[k] if d.isoweekday() <= 5]) for i, k in enumerate(week_keys)
        ],
        "weekends": [
            (i + 1, [d for d in by_week[k] if d.isoweekday() >= 6]) for i, k in enumerate(week_keys)
        ],
        "half_term": [
            (1, [d for d in days if d < config.half_term_split]),
            (2, [d for d in days if d >= config.half_term_split]),
        ],
        "full_term": [(1, days)],
    }
    return out


def build_slices(
    config: StudyConfig,
    epochs: Sequence[str] | None = None,
    granularities: Sequence[str] | None = None,
) -> list[TimeSlice]:
    """Materialize every epoch x granularity slice with concrete UTC bounds.

    Deterministic ordering: epoch, then granularity, then index. Instances
    with no member days (e.g. a weekend-less partial week) still appear, with
    empty bounds, so the catalog shape is config-derived only.
    """
    use_epochs = tuple(epochs) if epochs is not None else EPOCHS
    use_grans = tuple(granularities) if granularities is not None else GRANULARITIES
    for e in use_epochs:
        if e not in EPOCHS:
            raise ConfigError(f"unknown epoch {e!r}")
    for g in use_grans:
        if g not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {g!r}")

    instance_days = _granularity_days(config)
    boundary_cache: dict[tuple[date, int], int] = {}

    def boundary(d: date, hour: int) -> int:
        key = (d, hour)
        if key not in boundary_cache:
            boundary_cache[key] = _day_boundary_ms(d, hour, config)
        return boundary_cache[key]

    slices: list[TimeSlice] = []
    for epoch in EPOCHS:
        if epoch not in use_epochs:
            continue
        h0, h1 = EPOCH_HOURS[epoch]
        for gran in GRANULARITIES:
            if gran not in use_grans:
                continue
            for index, days in instance_days[gran]:
                bounds = []
                for d in days:
                    s = boundary(d, h0)
                    e = boundary(d, h1)
                    if e > s:
                        bounds.append((s, e))
                slices.append(TimeSlice(epoch=epoch, granularity=gran, index=index, bounds=tuple(bounds)))
    return slices


def assign(records: Sequence, sl: TimeSlice, timestamps: Sequence[int] | None = None) -> list:
    """Records whose timestamp falls in the slice's intervals, order kept.

    `records` must be sorted by timestamp; pass `timestamps` to reuse a
    precomputed key list across many slices.
    """
    if timestamps is None:
        timestamps = [r.timestamp for r in records]
    out: list = []
    for s, e in sl.bounds:
        lo = bisect_left(timestamps, s)
        hi = bisect_left(timestamps, e)
        out.extend(records[lo:hi])
    return out


def local_fractional_hour(ts_ms: int, config: StudyConfig) -> float:
    """Local clock time of a UTC ms instant as fractional hours in [0, 24)."""
    dt = datetime.fromtimestamp(ts_ms / 1000.0, tz=config.tzinfo)
    return dt.hour + dt.minute / 60.0 + dt.second / 3600.0 + dt.microsecond / 3.6e9


def local_date(ts_ms: int, config: StudyConfig) -> date:
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=config.tzinfo).date()


def night_bounds(config: StudyConfig) -> tuple[tuple[int, int], ...]:
    """UTC intervals of every night epoch (00:00-06:00) in the study."""
    out = []
    for d in config.days():
        s = _day_boundary_ms(d, 0, config)
        e = _day_boundary_ms(d, 6, config)
        if e > s:
            out.append((s, e))
    return tuple(out)
