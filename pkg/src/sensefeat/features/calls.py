"""Communication features from call logs, split by direction and contact group.

A call belongs wholly to the slice containing its start timestamp. Every
count is an observed value: a slice with zero calls reports zeros, not
missing, as long as the call log itself was collected.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from ..records import CALL_DIRECTIONS, CallRecord

CATEGORIES = ("everyone", "family", "friend_off_campus", "friend_on_campus")
_NAMED = ("family", "friend_off_campus", "friend_on_campus")


def feature_keys() -> list[str]:
    keys = []
    for direction in CALL_DIRECTIONS:
        for category in CATEGORIES:
            keys.append(f"{direction}_count:{category}")
            keys.append(f"{direction}_duration_s:{category}")
    for category in CATEGORIES:
        keys.append(f"correspondents:{category}")
    return keys


def call_features(
    calls_in_slice: Sequence[CallRecord], contacts: Mapping[str, str]
) -> dict[str, float]:
    """Counts, durations, and distinct-correspondent counts for one slice.

    Correspondents absent from the directory fall in the internal `other`
    category: they count toward `everyone` aggregates only.
    """
    out: dict[str, float] = {}
    for direction in CALL_DIRECTIONS:
        for category in CATEGORIES:
            out[f"{direction}_count:{category}"] = 0.0
            out[f"{direction}_duration_s:{category}"] = 0.0

    correspondents: dict[str, set[str]] = {c: set() for c in CATEGORIES}
    for call in calls_in_slice:
        category = contacts.get(call.correspondent, "other")
        out[f"{call.direction}_count:everyone"] += 1.0
        out[f"{call.direction}_duration_s:everyone"] += call.duration_s
        correspondents["everyone"].add(call.correspondent)
        if category in _NAMED:
            out[f"{call.direction}_count:{category}"] += 1.0
            out[f"{call.direction}_duration_s:{category}"] += call.duration_s
            correspondents[category].add(call.correspondent)

    for category in CATEGORIES:
        out[f"correspondents:{category}"] = float(len(correspondents[category]))
    return out
