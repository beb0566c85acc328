"""Sleep and step features from Fitbit minute / 5-minute records.

Sleep bouts are maximal runs of one state over consecutive minutes (a missing
minute breaks the run). Activity bouts segment the 5-minute step bins:
under 10 steps is sedentary, over 10 switches to active, and a bin of exactly
10 stays in the current kind, honoring both of the source rules' strict
inequalities. A hole of more than one missing bin terminates the current
bout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..records import MINUTE_MS, STEP_BIN_MS, SleepMinute, StepBin

log = logging.getLogger(__name__)

BOUT_STATES = ("asleep", "restless", "awake")

SLEEP_STEMS = tuple(
    [f"{state}_count" for state in ("asleep", "restless", "awake", "unknown")]
    + ["weak_efficiency", "strong_efficiency"]
    + [
        f"{state}_{stem}"
        for state in BOUT_STATES
        for stem in (
            "bouts",
            "bout_total_min",
            "bout_mean_min",
            "bout_max_min",
            "bout_min_min",
            "longest_bout_start",
            "longest_bout_end",
            "shortest_bout_start",
            "shortest_bout_end",
        )
    ]
)

STEPS_STEMS = (
    "total_steps",
    "max_5min_steps",
    "active_bouts",
    "sedentary_bouts",
    "active_bout_length_max_min",
    "active_bout_length_min_min",
    "active_bout_length_mean_min",
    "sedentary_bout_length_max_min",
    "sedentary_bout_length_min_min",
    "sedentary_bout_length_mean_min",
    "active_bout_steps_max",
    "active_bout_steps_min",
    "active_bout_steps_mean",
)


def sleep_feature_keys() -> list[str]:
    return list(SLEEP_STEMS)


def steps_feature_keys() -> list[str]:
    return list(STEPS_STEMS)


@dataclass(frozen=True)
class SleepBout:
    state: str
    start: int  # UTC ms of the first minute
    end: int  # UTC ms just past the last minute
    length_min: int


@dataclass(frozen=True)
class ActivityBout:
    kind: str  # "active" | "sedentary"
    start: int
    bins: int
    steps: int

    @property
    def length_min(self) -> float:
        return self.bins * 5.0


def sleep_bouts(minutes: Sequence[SleepMinute]) -> list[SleepBout]:
    """Maximal runs of one state over timestamp-consecutive minutes."""
    bouts: list[SleepBout] = []
    run_state: str | None = None
    run_start = 0
    run_len = 0
    prev_ts: int | None = None
    for m in minutes:
        contiguous = prev_ts is not None and m.timestamp - prev_ts == MINUTE_MS
        if m.state != run_state or not contiguous:
            if run_state is not None:
                bouts.append(
                    SleepBout(state=run_state, start=run_start, end=run_start + run_len * MINUTE_MS, length_min=run_len)
                )
            run_state = m.state
            run_start = m.timestamp
            run_len = 0
        run_len += 1
        prev_ts = m.timestamp
    if run_state is not None:
        bouts.append(
            SleepBout(state=run_state, start=run_start, end=run_start + run_len * MINUTE_MS, length_min=run_len)
        )
    return bouts


def sleep_features(minutes_in_slice: Sequence[SleepMinute]) -> dict[str, float]:
    """Counts, the two efficiency ratios, and per-state bout statistics.

    Efficiencies are missing when no asleep/restless/awake samples exist;
    bout statistics are missing for states without bouts.
    """
    if not minutes_in_slice:
        return {}
    out: dict[str, float] = {}
    counts = {s: 0 for s in ("asleep", "restless", "awake", "unknown")}
    for m in minutes_in_slice:
        counts[m.state] += 1
    for state, n in counts.items():
        out[f"{state}_count"] = float(n)

    denom = counts["asleep"] + counts["restless"] + counts["awake"]
    if denom > 0:
        out["weak_efficiency"] = (counts["asleep"] + counts["restless"]) / denom
        out["strong_efficiency"] = counts["asleep"] / denom

    bouts = sleep_bouts(minutes_in_slice)
    for state in BOUT_STATES:
        mine = [b for b in bouts if b.state == state]
        if not mine:
            continue
        lengths = np.asarray([b.length_min for b in mine], dtype=float)
        out[f"{state}_bouts"] = float(len(mine))
        out[f"{state}_bout_total_min"] = float(lengths.sum())
        out[f"{state}_bout_mean_min"] = float(lengths.mean())
        out[f"{state}_bout_max_min"] = float(lengths.max())
        out[f"{state}_bout_min_min"] = float(lengths.min())
        # ties on length break by earliest start
        longest = max(mine, key=lambda b: (b.length_min, -b.start))
        shortest = min(mine, key=lambda b: (b.length_min, b.start))
        out[f"{state}_longest_bout_start"] = float(longest.start)
        out[f"{state}_longest_bout_end"] = float(longest.end)
        out[f"{state}_shortest_bout_start"] = float(shortest.start)
        out[f"{state}_shortest_bout_end"] = float(shortest.end)
    return out


def activity_bouts(bins: Sequence[StepBin]) -> list[ActivityBout]:
    """Active/sedentary segmentation of 5-minute step bins.

    <10 steps is sedentary, >10 active, exactly 10 keeps the current kind
    (sedentary when it opens a segment). A hole of more than one missing bin
    ends the current bout.
    """
    bouts: list[ActivityBout] = []
    kind: str | None = None
    start = 0
    n_bins = 0
    steps = 0
    prev_start: int | None = None

    def flush():
        nonlocal kind, n_bins, steps
        if kind is not None:
            bouts.append(ActivityBout(kind=kind, start=start, bins=n_bins, steps=steps))
        kind = None
        n_bins = 0
        steps = 0

    for b in bins:
        if prev_start is not None and b.start - prev_start > 2 * STEP_BIN_MS:
            flush()
        if b.steps > 10:
            new_kind = "active"
        elif b.steps < 10:
            new_kind = "sedentary"
        else:
            new_kind = kind if kind is not None else "sedentary"
        if new_kind != kind:
            flush()
            kind = new_kind
            start = b.start
        n_bins += 1
        steps += b.steps
        prev_start = b.start
    flush()
    return bouts


def steps_features(bins_in_slice: Sequence[StepBin]) -> dict[str, float]:
    """Step totals, the 5-minute maximum, and activity-bout statistics."""
    if not bins_in_slice:
        return {}
    out: dict[str, float] = {}
    values = np.asarray([b.steps for b in bins_in_slice], dtype=float)
    out["total_steps"] = float(values.sum())
    out["max_5min_steps"] = float(values.max())

    bouts = activity_bouts(bins_in_slice)
    for kind in ("active", "sedentary"):
        mine = [b for b in bouts if b.kind == kind]
        out[f"{kind}_bouts"] = float(len(mine))
        if not mine:
            continue
        lengths = np.asarray([b.length_min for b in mine])
        out[f"{kind}_bout_length_max_min"] = float(lengths.max())
        out[f"{kind}_bout_length_min_min"] = float(lengths.min())
        out[f"{kind}_bout_length_mean_min"] = float(lengths.mean())
    active = [b for b in bouts if b.kind == "active"]
    if active:
        totals = np.asarray([b.steps for b in active], dtype=float)
        out["active_bout_steps_max"] = float(totals.max())
        out["active_bout_steps_min"] = float(totals.min())
        out["active_bout_steps_mean"] = float(totals.mean())
    return out
