"""Deterministic numeric kernels shared by the feature modules.

Every function here is pure: identical inputs (and seed, where one applies)
produce bit-identical outputs, so the kernels are safe to call from any
number of concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateClustering, DegenerateFit, InsufficientData

EARTH_RADIUS_M = 6_371_000.0

KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10

# Grid-index fast path kicks in above this many unique 2-D points.
_DBSCAN_BRUTE_LIMIT = 512


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS-ish (latitude, longitude) pair in decimal degrees."""

    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")


@dataclass(frozen=True)
class ClusterResult:
    """Labels, centers, and the exact sum of squared point-center distances.

    Labels are 0-based cluster ids; -1 marks noise (density clustering only).
    ``sse`` is recomputable from ``labels`` and ``centers``; noise points
    contribute nothing.
    """

    labels: tuple[int, ...]
    centers: tuple[tuple[float, ...], ...]
    sse: float

    @property
    def n_clusters(self) -> int:
        return len(self.centers)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371,000 m."""
    lat1 = math.radians(a.latitude)
    lat2 = math.radians(b.latitude)
    dlat = lat2 - lat1
    dlon = math.radians(b.longitude - a.longitude)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_matrix(lat: np.ndarray, lon: np.ndarray, lat0: float, lon0: float) -> np.ndarray:
    """Vectorized haversine meters from each (lat, lon) to a single point."""
    lat_r = np.radians(lat)
    lat0_r = math.radians(lat0)
    dlat = lat_r - lat0_r
    dlon = np.radians(lon - lon0)
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat_r) * math.cos(lat0_r) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def zscore(values: Sequence[float]) -> list[float]:
    """(v - mean) / population std per element; all zeros when the std is 0."""
    if len(values) == 0:
        raise InsufficientData("zscore needs at least one value")
    arr = np.asarray(values, dtype=float)
    std = float(arr.std())
    if std == 0.0:
        return [0.0] * arr.size
    mean = float(arr.mean())
    return [(float(v) - mean) / std for v in arr]


# ---------------------------------------------------------------------------
# K-means (Lloyd's algorithm, k-means++ init, seeded restarts)
# ---------------------------------------------------------------------------

def kmeans(points: Sequence[Sequence[float]] | np.ndarray, k: int, seed: int) -> ClusterResult:
    """Cluster points into k groups; deterministic for a given seed.

    Runs Lloyd's iterations from a k-means++ start, 10 restarts, and keeps
    the restart with the smallest sum of squared distances.

    Raises DegenerateClustering when there are fewer than k distinct points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        raise InsufficientData("kmeans needs at least one point")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if n_distinct < k:
        raise DegenerateClustering(f"kmeans with k={k} needs >= {k} distinct points, have {n_distinct}")

    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for _ in range(KMEANS_RESTARTS):
        labels, centers, sse = _lloyd(pts, k, rng)
        if best is None or sse < best[2]:
            best = (labels, centers, sse)
    labels, centers, sse = best
    return ClusterResult(
        labels=tuple(int(l) for l in labels),
        centers=tuple(tuple(float(x) for x in c) for c in centers),
        sse=float(sse),
    )


def _kmeanspp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((k, pts.shape[1]), dtype=float)
    centers[0] = pts[int(rng.integers(n))]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            centers[j] = pts[int(rng.choice(n, p=d2 / total))]
        else:
            # squared distances can underflow to 0 for near-identical points;
            # fall back to the first point not already chosen as a center
            fresh = next(
                (i for i in range(n) if not any((pts[i] == centers[c]).all() for c in range(j))),
                None,
            )
            if fresh is None:
                raise DegenerateClustering("k-means++ ran out of distinct points")
            centers[j] = pts[fresh]
        d2 = np.minimum(d2, ((pts - centers[j]) ** 2).sum(axis=1))
    return centers


def _assign_labels(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _update_centers(pts: np.ndarray, labels: np.ndarray, centers: np.ndarray, k: int) -> np.ndarray:
    new = centers.copy()
    taken: set[int] = set()
    for j in range(k):
        members = pts[labels == j]
        if members.shape[0] > 0:
            new[j] = members.mean(axis=0)
    # an empty cluster takes the point farthest from its current center
    d2 = ((pts - new[labels]) ** 2).sum(axis=1)
    for j in range(k):
        if (labels == j).any():
            continue
        order = np.argsort(-d2, kind="stable")
        pick = next(int(i) for i in order if int(i) not in taken)
        taken.add(pick)
        new[j] = pts[pick]
    return new


def _lloyd(pts: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
    centers = _kmeanspp_init(pts, k, rng)
    labels = _assign_labels(pts, centers)
    prev_sse = math.inf
    for _ in range(KMEANS_MAX_ITER):
        centers = _update_centers(pts, labels, centers, k)
        new_labels = _assign_labels(pts, centers)
        sse = float(((pts - centers[new_labels]) ** 2).sum())
        assert sse <= prev_sse + 1e-9 * max(1.0, abs(prev_sse)), "k-means objective increased"
        prev_sse = sse
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels = _repair_empty_clusters(pts, labels, k)
    centers = _update_centers(pts, labels, centers, k)
    sse = float(((pts - centers[labels]) ** 2).sum())
    return labels, centers, sse


def _repair_empty_clusters(pts: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Guarantee every returned cluster owns a point.

    Assignment ties (possible when squared distances underflow for
    near-identical points) can starve a cluster; donate the farthest point of
    a multi-member cluster to each empty one. No-op on healthy runs.
    """
    labels = labels.copy()
    for j in range(k):
        if (labels == j).any():
            continue
        counts = np.bincount(labels, minlength=k)
        donors = np.nonzero(counts[labels] >= 2)[0]
        means = np.stack([pts[labels == c].mean(axis=0) if counts[c] else pts[0] for c in range(k)])
        d2 = ((pts[donors] - means[labels[donors]]) ** 2).sum(axis=1)
        labels[int(donors[int(np.argmax(d2))])] = j
    return labels


# ---------------------------------------------------------------------------
# DBSCAN
# ---------------------------------------------------------------------------

def dbscan(
    points: Sequence[Sequence[float]] | np.ndarray,
    eps: float,
    min_pts: int,
    metric: str = "euclidean",
) -> ClusterResult:
    """Density clustering with noise labeled -1.

    Deterministic: points are scanned in input order and clusters numbered by
    discovery order; a border point reachable from several clusters belongs
    to the one discovered first. Neighborhoods use ``dist <= eps`` and count
    the point itself. ``metric="haversine"`` treats rows as (lat, lon) in
    degrees and measures eps in meters.

    Duplicate coordinates are collapsed internally (neighbor counts keep the
    multiplicities), which leaves the labeling identical to a run on the full
    multiset.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    if metric not in ("euclidean", "haversine"):
        raise ValueError(f"unknown metric: {metric}")

    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return ClusterResult(labels=(), centers=(), sse=0.0)
    if pts.ndim == 1:
        pts = pts[:, None]
    if metric == "haversine" and pts.shape[1] != 2:
        raise ValueError("haversine metric needs (lat, lon) rows")

    uniq, inverse, counts = _unique_rows(pts)
    neigh, weights = _neighbor_lists(uniq, counts, eps, metric)

    m = uniq.shape[0]
    UNVISITED = -2
    ulabels = np.full(m, UNVISITED, dtype=np.int64)
    enqueued = np.zeros(m, dtype=bool)
    cluster = 0
    for i in range(m):
        if ulabels[i] != UNVISITED:
            continue
        if weights[i] < min_pts:
            ulabels[i] = -1
            continue
        ulabels[i] = cluster
        queue: list[int] = []
        _enqueue_claimable(neigh[i], ulabels, enqueued, queue)
        qi = 0
        while qi < len(queue):
            j = queue[qi]
            qi += 1
            ulabels[j] = cluster
            if weights[j] >= min_pts:
                _enqueue_claimable(neigh[j], ulabels, enqueued, queue)
        cluster += 1

    labels = ulabels[inverse]
    centers = []
    sse = 0.0
    for c in range(cluster):
        members = pts[labels == c]
        center = members.mean(axis=0)
        centers.append(tuple(float(x) for x in center))
        if metric == "haversine":
            d = haversine_matrix(members[:, 0], members[:, 1], float(center[0]), float(center[1]))
            sse += float((d ** 2).sum())
        else:
            sse += float(((members - center) ** 2).sum())
    return ClusterResult(labels=tuple(int(l) for l in labels), centers=tuple(centers), sse=sse)


def _unique_rows(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique rows ordered by first occurrence, with inverse map and counts."""
    uniq, idx, inv, cnt = np.unique(pts, axis=0, return_index=True, return_inverse=True, return_counts=True)
    order = np.argsort(idx, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return uniq[order], rank[inv], cnt[order]


def _enqueue_claimable(cand: np.ndarray, ulabels: np.ndarray, enqueued: np.ndarray, queue: list[int]) -> None:
    """Queue the unclaimed (unvisited or noise-marked) neighbors, once each."""
    lab = ulabels[cand]
    new = cand[((lab == -2) | (lab == -1)) & ~enqueued[cand]]
    enqueued[new] = True
    queue.extend(new.tolist())


def _neighbor_lists(
    uniq: np.ndarray, counts: np.ndarray, eps: float, metric: str
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact eps-neighbor lists plus multiplicity-weighted neighborhood sizes."""
    m = uniq.shape[0]
    if metric == "haversine":
        xy, usable = _project_equirect(uniq)
        if usable and m > _DBSCAN_BRUTE_LIMIT:
            lists = _grid_neighbors(uniq, xy, eps)
        else:
            lat = uniq[:, 0]
            lon = uniq[:, 1]
            lists = []
            for i in range(m):
                d = haversine_matrix(lat, lon, float(lat[i]), float(lon[i]))
                lists.append(np.nonzero(d <= eps)[0])
    elif m <= 2048:
        d2 = ((uniq[:, None, :] - uniq[None, :, :]) ** 2).sum(axis=2)
        lists = [np.nonzero(row <= eps * eps)[0] for row in d2]
    else:
        lists = [np.nonzero(((uniq - uniq[i]) ** 2).sum(axis=1) <= eps * eps)[0] for i in range(m)]
    weights = np.asarray([int(counts[lst].sum()) for lst in lists], dtype=np.int64)
    return lists, weights


def _project_equirect(latlon: np.ndarray) -> tuple[np.ndarray, bool]:
    """Local equirectangular meters; unusable near poles or across the antimeridian."""
    lat = latlon[:, 0]
    lon = latlon[:, 1]
    if np.abs(lat).max() > 80.0 or (lon.max() - lon.min()) > 180.0 or (lat.max() - lat.min()) > 5.0:
        return latlon, False
    lat0 = math.radians(float(lat.mean()))
    x = np.radians(lon) * math.cos(lat0) * EARTH_RADIUS_M
    y = np.radians(lat) * EARTH_RADIUS_M
    return np.column_stack([x, y]), True


def _grid_neighbors(latlon: np.ndarray, xy: np.ndarray, eps: float) -> list[np.ndarray]:
    """Exact eps-neighborhoods: grid candidates (2-cell margin), haversine test.

    The 2-cell search margin absorbs the equirectangular projection error, so
    candidate sets are supersets of the true eps-balls and the exact distance
    test below makes the result identical to brute force.
    """
    cell = eps
    keys = np.floor(xy / cell).astype(np.int64)
    buckets: dict[tuple[int, int], list[int]] = {}
    for i, (kx, ky) in enumerate(keys):
        buckets.setdefault((int(kx), int(ky)), []).append(i)
    cell_cand: dict[tuple[int, int], np.ndarray] = {}
    for kx, ky in buckets:
        cand: list[int] = []
        for dx in range(-2, 3):
            for dy in range(-2, 3):
                cand.extend(buckets.get((kx + dx, ky + dy), ()))
        cell_cand[(kx, ky)] = np.asarray(sorted(cand), dtype=np.int64)
    lat = latlon[:, 0]
    lon = latlon[:, 1]
    lists: list[np.ndarray] = []
    for i in range(latlon.shape[0]):
        cand_arr = cell_cand[(int(keys[i, 0]), int(keys[i, 1]))]
        d = haversine_matrix(lat[cand_arr], lon[cand_arr], float(lat[i]), float(lon[i]))
        lists.append(cand_arr[d <= eps])
    return lists


# ---------------------------------------------------------------------------
# Lomb-Scargle periodogram
# ---------------------------------------------------------------------------

def lomb_scargle_psd(
    times: Sequence[float] | np.ndarray,
    values: Sequence[float] | np.ndarray,
    frequencies: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Classical normalized Lomb-Scargle periodogram for uneven sampling.

    ``times`` in seconds, ``frequencies`` in cycles per second (> 0). Values
    are mean-centered internally and the power normalized by twice the sample
    variance, so constant series yield zero power everywhere.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and values must have equal length")
    order = np.argsort(t, kind="stable")
    t = t[order]
    y = y[order]
    keep = np.concatenate([[True], np.diff(t) > 0])
    t = t[keep]
    y = y[keep]
    if t.size < 3:
        raise InsufficientData(f"lomb_scargle_psd needs >= 3 samples, have {t.size}")

    f = np.asarray(frequencies, dtype=float)
    if (f <= 0).any():
        raise ValueError("frequencies must be positive")

    y = y - y.mean()
    var = float(y.var(ddof=1))
    if var <= 0.0:
        return np.zeros(f.size, dtype=float)

    omega = 2.0 * math.pi * f[:, None]          # (F, 1)
    wt = omega * t[None, :]                     # (F, N)
    tau = np.arctan2(np.sin(2.0 * wt).sum(axis=1), np.cos(2.0 * wt).sum(axis=1)) / (2.0 * omega[:, 0])
    arg = wt - (omega[:, 0] * tau)[:, None]
    cos_a = np.cos(arg)
    sin_a = np.sin(arg)
    cc = (cos_a ** 2).sum(axis=1)
    ss = (sin_a ** 2).sum(axis=1)
    yc = (y[None, :] * cos_a).sum(axis=1)
    ys = (y[None, :] * sin_a).sum(axis=1)
    # by construction of tau one denominator can vanish only when its numerator does
    cterm = np.divide(yc ** 2, cc, out=np.zeros_like(cc), where=cc > 0)
    sterm = np.divide(ys ** 2, ss, out=np.zeros_like(ss), where=ss > 0)
    return np.maximum((cterm + sterm) / (2.0 * var), 0.0)


# ---------------------------------------------------------------------------
# Ordinary least squares
# ---------------------------------------------------------------------------

def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """OLS line fit returning (slope, intercept, residual sum of squares)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError("xs and ys must have equal length")
    if x.size < 2:
        raise InsufficientData(f"linear_fit needs >= 2 points, have {x.size}")
    xm = float(x.mean())
    ym = float(y.mean())
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise DegenerateFit("linear_fit: all xs equal")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    rss = float(((y - (intercept + slope * x)) ** 2).sum())
    return slope, intercept, rss
