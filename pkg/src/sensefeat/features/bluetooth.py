"""Bluetooth features: device ownership clustering and per-scope scan stats.

Scanned addresses are profiled over the whole study (days seen, average scans
per seen day), the two profile dimensions are z-normalized and summed into a
score, and 1-D k-means with K=2 and K=3 splits the score axis into self /
(related) / others. K=2 wins only when its sum of squared distances is
strictly smaller than K=3's; the cluster with the highest mean score holds
the person's own devices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from ..errors import DegenerateClustering, InsufficientData
from ..numerics import kmeans, zscore
from ..records import BluetoothScan

log = logging.getLogger(__name__)

SCOPES = ("all", "self", "related", "others")

STEMS = (
    "unique_devices",
    "scans_most_frequent",
    "scans_least_frequent",
    "scans_sum",
    "scans_mean",
    "scans_std",
)


@dataclass(frozen=True)
class DeviceUsageProfile:
    address: str
    days_seen: int
    total_count: int
    avg_frequency: float  # total_count / days_seen
    score: float = 0.0


@dataclass(frozen=True)
class DeviceOwnership:
    labels: Mapping[str, str]  # address -> self | related | others
    chosen_k: int
    profiles: tuple[DeviceUsageProfile, ...]


def feature_keys() -> list[str]:
    return [f"{stem}:{scope}" for stem in STEMS for scope in SCOPES]


def device_profiles(scans: Sequence[BluetoothScan], tz=timezone.utc) -> list[DeviceUsageProfile]:
    """Per-address study-level counting (days seen, totals), scores unset.

    Sorted by address so downstream clustering sees a scan-order-independent
    point sequence.
    """
    days: dict[str, set[date]] = {}
    totals: dict[str, int] = {}
    for scan in scans:
        d = datetime.fromtimestamp(scan.timestamp / 1000.0, tz=tz).date()
        days.setdefault(scan.address, set()).add(d)
        totals[scan.address] = totals.get(scan.address, 0) + 1
    return [
        DeviceUsageProfile(
            address=addr,
            days_seen=len(days[addr]),
            total_count=totals[addr],
            avg_frequency=totals[addr] / len(days[addr]),
        )
        for addr in sorted(days)
    ]


def cluster_devices(scans: Sequence[BluetoothScan], seed: int, tz=timezone.utc) -> DeviceOwnership:
    """Label every scanned address self / related / others.

    Degenerate inputs collapse conservatively: fewer than two distinct
    addresses, or score vectors k-means cannot split, label everything self
    with chosen_k=2. Fewer than three distinct scores skips the K=3
    candidate.
    """
    if not scans:
        raise InsufficientData("cluster_devices needs at least one scan")
    base = device_profiles(scans, tz=tz)
    z_days = zscore([p.days_seen for p in base])
    z_freq = zscore([p.avg_frequency for p in base])
    profiles = tuple(
        DeviceUsageProfile(
            address=p.address,
            days_seen=p.days_seen,
            total_count=p.total_count,
            avg_frequency=p.avg_frequency,
            score=zd + zf,
        )
        for p, zd, zf in zip(base, z_days, z_freq)
    )
    scores = [p.score for p in profiles]
    addresses = [p.address for p in profiles]
    distinct_scores = len(set(scores))

    if len(addresses) < 2 or distinct_scores < 2:
        return DeviceOwnership(labels={a: "self" for a in addresses}, chosen_k=2, profiles=profiles)

    points = [[s] for s in scores]
    try:
        result2 = kmeans(points, k=2, seed=seed)
    except DegenerateClustering:
        return DeviceOwnership(labels={a: "self" for a in addresses}, chosen_k=2, profiles=profiles)

    result3 = None
    if distinct_scores >= 3:
        result3 = kmeans(points, k=3, seed=seed)

    if result3 is None or result2.sse < result3.sse:
        chosen, chosen_k = result2, 2
    else:
        chosen, chosen_k = result3, 3

    order = _clusters_by_mean_score(scores, chosen.labels, chosen_k)
    names = ("self", "others") if chosen_k == 2 else ("self", "related", "others")
    label_of_cluster = {cluster: names[rank] for rank, cluster in enumerate(order)}
    labels = {a: label_of_cluster[l] for a, l in zip(addresses, chosen.labels)}
    return DeviceOwnership(labels=labels, chosen_k=chosen_k, profiles=profiles)


def _clusters_by_mean_score(scores: Sequence[float], labels: Sequence[int], k: int) -> list[int]:
    means = []
    for c in range(k):
        members = [s for s, l in zip(scores, labels) if l == c]
        means.append((-(sum(members) / len(members)), c))
    return [c for _, c in sorted(means)]


def bluetooth_features(
    scans_in_slice: Sequence[BluetoothScan], ownership: DeviceOwnership
) -> dict[str, float]:
    """Scan-count statistics per scope over one slice's scans.

    A scope with no scans in the slice (including `related` when K=2 was
    chosen) emits nothing, which the output layer records as missing.
    """
    counts: dict[str, int] = {}
    for scan in scans_in_slice:
        counts[scan.address] = counts.get(scan.address, 0) + 1

    out: dict[str, float] = {}
    for scope in SCOPES:
        if scope == "all":
            scoped = counts
        else:
            scoped = {a: c for a, c in counts.items() if ownership.labels.get(a) == scope}
        if not scoped:
            continue
        # ties on most/least scanned break by lexicographic address
        by_count = sorted(scoped.items(), key=lambda kv: (kv[1], kv[0]))
        values = np.asarray([c for _, c in by_count], dtype=float)
        out[f"unique_devices:{scope}"] = float(len(scoped))
        out[f"scans_most_frequent:{scope}"] = float(by_count[-1][1])
        out[f"scans_least_frequent:{scope}"] = float(by_count[0][1])
        out[f"scans_sum:{scope}"] = float(values.sum())
        out[f"scans_mean:{scope}"] = float(values.mean())
        out[f"scans_std:{scope}"] = float(values.std())
    return out
