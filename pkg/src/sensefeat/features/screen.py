"""Phone-usage features from screen status transitions.

Interaction runs from an `unlock` event to the next `off` or `lock`;
unlocked time runs from an `unlock` to the next `lock`. Interleaved `on`
events never affect bouts. Bouts crossing a slice boundary contribute their
clipped overlap, which keeps per-slice time accounting consistent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import StudyConfig
from ..records import ScreenEvent
from ..windowing import TimeSlice, local_fractional_hour

log = logging.getLogger(__name__)

STEMS = (
    "unlocks_per_min",
    "interaction_time_s",
    "unlocked_time_s",
    "first_unlock_hour",
    "first_on_hour",
    "last_unlock_hour",
    "last_lock_hour",
    "last_on_hour",
    "interaction_bout_max_s",
    "interaction_bout_min_s",
    "interaction_bout_mean_s",
    "interaction_bout_std_s",
    "unlocked_bout_max_s",
    "unlocked_bout_min_s",
    "unlocked_bout_mean_s",
    "unlocked_bout_std_s",
)


def feature_keys() -> list[str]:
    return list(STEMS)


@dataclass(frozen=True)
class InteractionBout:
    start: int
    end: int
    kind: str  # "interaction" | "unlocked"
    truncated: bool = False  # closed at the last event instead of a terminator


def extract_bouts(events: Sequence[ScreenEvent]) -> list[InteractionBout]:
    """Maximal interaction and unlocked bouts over a sorted event stream.

    A trailing bout with no terminator is closed at the last event timestamp
    and flagged truncated; zero-length bouts are dropped.
    """
    bouts: list[InteractionBout] = []
    interact_start: int | None = None
    unlocked_start: int | None = None

    def close(kind: str, start: int | None, end: int, truncated: bool = False) -> None:
        if start is not None and end > start:
            bouts.append(InteractionBout(start=start, end=end, kind=kind, truncated=truncated))

    for e in events:
        if e.status == "unlock":
            if interact_start is None:
                interact_start = e.timestamp
            if unlocked_start is None:
                unlocked_start = e.timestamp
        elif e.status == "lock":
            close("interaction", interact_start, e.timestamp)
            interact_start = None
            close("unlocked", unlocked_start, e.timestamp)
            unlocked_start = None
        elif e.status == "off":
            close("interaction", interact_start, e.timestamp)
            interact_start = None

    if events:
        last = events[-1].timestamp
        close("interaction", interact_start, last, truncated=True)
        close("unlocked", unlocked_start, last, truncated=True)
    bouts.sort(key=lambda b: (b.start, b.end, b.kind))
    return bouts


def _clipped_seconds(bout: InteractionBout, sl: TimeSlice) -> float:
    total = 0
    for s, e in sl.bounds:
        lo = max(bout.start, s)
        hi = min(bout.end, e)
        if hi > lo:
            total += hi - lo
    return total / 1000.0


def usage_features(
    events_in_slice: Sequence[ScreenEvent],
    bouts: Sequence[InteractionBout],
    sl: TimeSlice,
    config: StudyConfig,
) -> dict[str, float]:
    """Usage features for one slice.

    `bouts` are the study-wide bouts; their in-slice overlap is what counts.
    Unlocks per minute divide by the whole slice span. Hour-of-day features
    are local fractional hours of the first/last matching events in the
    slice.
    """
    clipped: dict[str, list[float]] = {"interaction": [], "unlocked": []}
    for b in bouts:
        seconds = _clipped_seconds(b, sl)
        if seconds > 0:
            clipped[b.kind].append(seconds)

    if not events_in_slice and not clipped["interaction"] and not clipped["unlocked"]:
        return {}

    out: dict[str, float] = {}
    minutes = sl.minutes
    unlocks = [e for e in events_in_slice if e.status == "unlock"]
    if minutes > 0:
        out["unlocks_per_min"] = len(unlocks) / minutes
    out["interaction_time_s"] = float(sum(clipped["interaction"]))
    out["unlocked_time_s"] = float(sum(clipped["unlocked"]))

    ons = [e for e in events_in_slice if e.status == "on"]
    locks = [e for e in events_in_slice if e.status == "lock"]
    if unlocks:
        out["first_unlock_hour"] = local_fractional_hour(unlocks[0].timestamp, config)
        out["last_unlock_hour"] = local_fractional_hour(unlocks[-1].timestamp, config)
    if ons:
        out["first_on_hour"] = local_fractional_hour(ons[0].timestamp, config)
        out["last_on_hour"] = local_fractional_hour(ons[-1].timestamp, config)
    if locks:
        out["last_lock_hour"] = local_fractional_hour(locks[-1].timestamp, config)

    for kind in ("interaction", "unlocked"):
        lengths = clipped[kind]
        if not lengths:
            continue
        arr = np.asarray(lengths)
        out[f"{kind}_bout_max_s"] = float(arr.max())
        out[f"{kind}_bout_min_s"] = float(arr.min())
        out[f"{kind}_bout_mean_s"] = float(arr.mean())
        out[f"{kind}_bout_std_s"] = float(arr.std())
    return out
