"""Mobility features from GPS fixes.

Motion labeling, DBSCAN significant places (global = whole study, local =
one slice), dwell accounting, entropy, radius of gyration, circadian
movement, and night-based home inference.

Time accounting is uniform across this module: each consecutive pair of
in-slice samples contributes `min(gap, gap_cap)` seconds attributed to the
earlier sample's state/cluster, so moving + static time always equals total
observed time and per-cluster dwell sums exactly to static time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..config import LocationParams
from ..errors import InsufficientData
from ..numerics import GeoPoint, dbscan, haversine_distance, lomb_scargle_psd
from ..records import LocationFix

log = logging.getLogger(__name__)

SCOPES = ("global", "local")

UNSCOPED_STEMS = (
    "variance_sum",
    "log_variance",
    "total_distance_m",
    "speed_mean_kmh",
    "speed_var_kmh",
    "circadian_movement",
    "time_at_home_10m_s",
    "time_at_home_100m_s",
)
SCOPED_STEMS = (
    "significant_places",
    "place_transitions",
    "radius_of_gyration_m",
    "top1_dwell_s",
    "top2_dwell_s",
    "top3_dwell_s",
    "pct_time_moving",
    "pct_time_insignificant",
    "stay_length_max_s",
    "stay_length_min_s",
    "stay_length_mean_s",
    "stay_length_std_s",
    "entropy",
    "normalized_entropy",
)

VARIANCE_FLOOR = 1e-10
CM_FLOOR = 1e-10
CM_BAND_HOURS = (23.5, 24.5)
CM_BINS = 80
HOME_NEAR_M = 10.0
HOME_FAR_M = 100.0


def feature_keys() -> list[str]:
    keys = list(UNSCOPED_STEMS)
    for stem in SCOPED_STEMS:
        for scope in SCOPES:
            keys.append(f"{stem}:{scope}")
    return keys


@dataclass(frozen=True)
class MotionSample:
    fix: LocationFix
    speed_kmh: float
    moving: bool

    @property
    def timestamp(self) -> int:
        return self.fix.timestamp


@dataclass(frozen=True)
class PlaceClustering:
    """One DBSCAN run over static samples: per-timestamp labels and centers."""

    labels_by_ts: Mapping[int, int]  # static sample ts -> cluster id, -1 noise
    centers: tuple[GeoPoint, ...]

    @property
    def n_clusters(self) -> int:
        return len(self.centers)


def label_motion(fixes: Sequence[LocationFix], params: LocationParams) -> list[MotionSample]:
    """Speed from consecutive fixes; moving iff strictly above the threshold.

    Same-timestamp duplicates keep the first fix. A pair further apart than
    the gap cap yields a static sample with zero speed (and contributes no
    distance downstream). The first sample inherits the second's speed and
    state; a lone fix is static.
    """
    deduped: list[LocationFix] = []
    for f in fixes:
        if deduped and f.timestamp == deduped[-1].timestamp:
            continue
        deduped.append(f)
    if not deduped:
        return []
    if len(deduped) == 1:
        return [MotionSample(fix=deduped[0], speed_kmh=0.0, moving=False)]

    samples: list[MotionSample] = []
    for prev, cur in zip(deduped, deduped[1:]):
        dt_s = (cur.timestamp - prev.timestamp) / 1000.0
        if dt_s > params.gap_cap_s:
            samples.append(MotionSample(fix=cur, speed_kmh=0.0, moving=False))
            continue
        speed = (haversine_distance(prev.point, cur.point) / 1000.0) / (dt_s / 3600.0)
        samples.append(MotionSample(fix=cur, speed_kmh=speed, moving=speed > params.speed_threshold_kmh))
    first = MotionSample(fix=deduped[0], speed_kmh=samples[0].speed_kmh, moving=samples[0].moving)
    return [first] + samples


def significant_places(samples: Sequence[MotionSample], params: LocationParams) -> PlaceClustering:
    """DBSCAN (haversine meters) over the static samples of a scope."""
    static = [s for s in samples if not s.moving]
    if not static:
        return PlaceClustering(labels_by_ts={}, centers=())
    pts = [(s.fix.point.latitude, s.fix.point.longitude) for s in static]
    result = dbscan(pts, eps=params.eps_m, min_pts=params.min_pts, metric="haversine")
    centers = tuple(GeoPoint(c[0], c[1]) for c in result.centers)
    return PlaceClustering(
        labels_by_ts={s.timestamp: l for s, l in zip(static, result.labels)}, centers=centers
    )


@dataclass
class DwellStats:
    total_s: float = 0.0
    moving_s: float = 0.0
    static_s: float = 0.0
    noise_s: float = 0.0
    cluster_dwell_s: dict[int, float] = None
    visits: list[tuple[int, float]] = None  # (cluster, stay seconds); a trailing visit may be 0
    labels_seen: set[int] = None
    transitions: int = 0

    def __post_init__(self):
        self.cluster_dwell_s = {} if self.cluster_dwell_s is None else self.cluster_dwell_s
        self.visits = [] if self.visits is None else self.visits
        self.labels_seen = set() if self.labels_seen is None else self.labels_seen


def dwell_stats(
    samples_in_slice: Sequence[MotionSample],
    labels_by_ts: Mapping[int, int],
    gap_cap_s: float,
) -> DwellStats:
    """Capped-gap time attribution plus visit segmentation for one slice."""
    stats = DwellStats()
    n = len(samples_in_slice)
    visit_label: int | None = None
    visit_dur = 0.0
    prev_significant: int | None = None

    def flush():
        nonlocal visit_label, visit_dur
        if visit_label is not None:
            stats.visits.append((visit_label, visit_dur))
        visit_label = None
        visit_dur = 0.0

    for i, s in enumerate(samples_in_slice):
        gap_s = (samples_in_slice[i + 1].timestamp - s.timestamp) / 1000.0 if i + 1 < n else None
        c = min(gap_s, gap_cap_s) if gap_s is not None else 0.0
        stats.total_s += c
        if s.moving:
            stats.moving_s += c
            flush()
            continue
        stats.static_s += c
        label = labels_by_ts.get(s.timestamp, -1)
        if label < 0:
            stats.noise_s += c
            flush()
            continue
        stats.labels_seen.add(label)
        stats.cluster_dwell_s[label] = stats.cluster_dwell_s.get(label, 0.0) + c
        if prev_significant is not None and prev_significant != label:
            stats.transitions += 1
        prev_significant = label
        if visit_label != label:
            flush()
            visit_label = label
        visit_dur += c
        if gap_s is not None and gap_s > gap_cap_s:
            flush()
    flush()
    return stats


def circadian_movement(fixes_in_slice: Sequence[LocationFix]) -> float | None:
    """Log spectral energy of the coordinates in the 24-hour period band.

    Needs at least 3 fixes spanning 24 hours; a constant trace bottoms out at
    log(1e-10).
    """
    if len(fixes_in_slice) < 3:
        return None
    ts = np.asarray([f.timestamp for f in fixes_in_slice], dtype=float)
    if (ts.max() - ts.min()) < 24 * 3600 * 1000:
        return None
    t_s = (ts - ts.min()) / 1000.0
    lat = np.asarray([f.point.latitude for f in fixes_in_slice])
    lon = np.asarray([f.point.longitude for f in fixes_in_slice])
    freqs = np.linspace(1.0 / (CM_BAND_HOURS[1] * 3600.0), 1.0 / (CM_BAND_HOURS[0] * 3600.0), CM_BINS)
    try:
        e_lat = float(lomb_scargle_psd(t_s, lat, freqs).mean())
        e_lon = float(lomb_scargle_psd(t_s, lon, freqs).mean())
    except InsufficientData:
        return None
    return math.log(e_lat + e_lon + CM_FLOOR)


def infer_home(
    fixes: Sequence[LocationFix],
    night_intervals: Sequence[tuple[int, int]],
    params: LocationParams,
) -> GeoPoint | None:
    """Center of the most-dwelled cluster of night (00:00-06:00) static fixes."""
    night = [f for f in fixes if any(s <= f.timestamp < e for s, e in night_intervals)]
    samples = label_motion(night, params)
    clustering = significant_places(samples, params)
    if clustering.n_clusters == 0:
        return None
    stats = dwell_stats(samples, clustering.labels_by_ts, params.gap_cap_s)
    best = max(range(clustering.n_clusters), key=lambda c: (stats.cluster_dwell_s.get(c, 0.0), -c))
    return clustering.centers[best]


def _weighted_centroid(centers: Sequence[GeoPoint], weights: Sequence[float]) -> GeoPoint:
    total = sum(weights)
    lat = sum(c.latitude * w for c, w in zip(centers, weights)) / total
    lon = sum(c.longitude * w for c, w in zip(centers, weights)) / total
    return GeoPoint(lat, lon)


def _scope_features(
    stats: DwellStats,
    clustering: PlaceClustering | None,
    rank: Sequence[int] | None,
    scope: str,
) -> dict[str, float]:
    out: dict[str, float] = {}
    if stats.total_s > 0:
        out[f"pct_time_moving:{scope}"] = 100.0 * stats.moving_s / stats.total_s
    if stats.static_s > 0:
        out[f"pct_time_insignificant:{scope}"] = 100.0 * stats.noise_s / stats.static_s
    if clustering is None or clustering.n_clusters == 0:
        return out

    labels = sorted(stats.labels_seen)
    out[f"significant_places:{scope}"] = float(len(labels))
    out[f"place_transitions:{scope}"] = float(stats.transitions)

    dwell = {l: stats.cluster_dwell_s.get(l, 0.0) for l in labels}
    total_dwell = sum(dwell.values())

    if len(labels) <= 1:
        out[f"radius_of_gyration_m:{scope}"] = 0.0
    elif total_dwell > 0:
        centers = [clustering.centers[l] for l in labels]
        weights = [dwell[l] for l in labels]
        centroid = _weighted_centroid(centers, weights)
        rog2 = sum(
            (w / total_dwell) * haversine_distance(c, centroid) ** 2 for c, w in zip(centers, weights)
        )
        out[f"radius_of_gyration_m:{scope}"] = math.sqrt(rog2)

    if rank is None:
        # ranked by in-slice dwell, ties broken by discovery order
        rank = [l for l, _ in sorted(dwell.items(), key=lambda kv: (-kv[1], kv[0]))]
    for i in range(3):
        if i < len(rank):
            out[f"top{i + 1}_dwell_s:{scope}"] = stats.cluster_dwell_s.get(rank[i], 0.0)

    stays = [d for _, d in stats.visits]
    if stays:
        arr = np.asarray(stays, dtype=float)
        out[f"stay_length_max_s:{scope}"] = float(arr.max())
        out[f"stay_length_min_s:{scope}"] = float(arr.min())
        out[f"stay_length_mean_s:{scope}"] = float(arr.mean())
        out[f"stay_length_std_s:{scope}"] = float(arr.std())

    if total_dwell > 0:
        probs = [d / total_dwell for d in dwell.values() if d > 0]
        entropy = -sum(p * math.log(p) for p in probs)
        out[f"entropy:{scope}"] = entropy
        out[f"normalized_entropy:{scope}"] = entropy / math.log(len(labels)) if len(labels) >= 2 else 0.0
    return out


def location_features(
    samples_in_slice: Sequence[MotionSample],
    global_clustering: PlaceClustering | None,
    local_clustering: PlaceClustering | None,
    global_rank: Sequence[int] | None,
    home: GeoPoint | None,
    params: LocationParams,
) -> dict[str, float]:
    """All location features for one slice.

    `global_rank` orders global cluster ids by study-wide dwell: "most
    frequented" is a study-wide notion for global clusters and an in-slice
    one for local clusters. Emits nothing for features whose inputs are
    absent.
    """
    if not samples_in_slice:
        return {}
    out: dict[str, float] = {}
    fixes = [s.fix for s in samples_in_slice]

    lat = np.asarray([f.point.latitude for f in fixes])
    lon = np.asarray([f.point.longitude for f in fixes])
    variance = float(lat.var() + lon.var())
    out["variance_sum"] = variance
    out["log_variance"] = math.log(variance + VARIANCE_FLOOR)

    total = 0.0
    for a, b in zip(samples_in_slice, samples_in_slice[1:]):
        if (b.timestamp - a.timestamp) / 1000.0 > params.gap_cap_s:
            continue
        total += haversine_distance(a.fix.point, b.fix.point)
    out["total_distance_m"] = total

    speeds = np.asarray([s.speed_kmh for s in samples_in_slice])
    out["speed_mean_kmh"] = float(speeds.mean())
    out["speed_var_kmh"] = float(speeds.var())

    cm = circadian_movement(fixes)
    if cm is not None:
        out["circadian_movement"] = cm

    if home is not None:
        near = 0.0
        far = 0.0
        n = len(samples_in_slice)
        for i, s in enumerate(samples_in_slice):
            if i + 1 >= n:
                break
            c = min((samples_in_slice[i + 1].timestamp - s.timestamp) / 1000.0, params.gap_cap_s)
            d = haversine_distance(s.fix.point, home)
            if d <= HOME_NEAR_M:
                near += c
            if d <= HOME_FAR_M:
                far += c
        out["time_at_home_10m_s"] = near
        out["time_at_home_100m_s"] = far

    for scope, clustering, rank in (
        ("global", global_clustering, global_rank),
        ("local", local_clustering, None),
    ):
        labels = clustering.labels_by_ts if clustering is not None else {}
        stats = dwell_stats(samples_in_slice, labels, params.gap_cap_s)
        out.update(_scope_features(stats, clustering, rank, scope))
    return out


def study_dwell_rank(samples: Sequence[MotionSample], clustering: PlaceClustering, gap_cap_s: float) -> list[int]:
    """Global cluster ids ordered by whole-study dwell, ties by discovery order."""
    stats = dwell_stats(samples, clustering.labels_by_ts, gap_cap_s)
    dwell = {c: stats.cluster_dwell_s.get(c, 0.0) for c in range(clustering.n_clusters)}
    return [c for c, _ in sorted(dwell.items(), key=lambda kv: (-kv[1], kv[0]))]
