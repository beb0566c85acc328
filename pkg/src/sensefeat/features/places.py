"""Semantic-place features over an annotated polygon map.

Fixes are labeled by ray-casting point-in-polygon lookup (first matching
polygon in file order wins; no match is off_campus). Bouts are maximal runs
of same-type fixes, broken by a type change or a sampling gap above the cap;
durations use the same capped-gap attribution as the location module, so
per-type dwell sums exactly to the slice's observed dwell.

Two fusion features combine streams: studying = a 30+ minute academic bout
with every overlapping step bin under 10 steps and no phone interaction;
socializing = a 20+ minute bout at housing or green space with voice/noise
conversation inferences for at least 80% of the bout.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import IngestError
from ..numerics import GeoPoint
from ..records import STEP_BIN_MS, ConversationInference, LocationFix, StepBin

log = logging.getLogger(__name__)

PLACE_TYPES = (
    "greek_social",
    "greek_all",
    "student_apartment",
    "residential_hall",
    "athletic",
    "green_space",
    "academic",
    "off_campus",
)
SOCIAL_TYPES = ("greek_social", "greek_all", "student_apartment", "residential_hall", "green_space")

TYPED_STEMS = (
    "dwell_min",
    "dwell_pct",
    "bouts",
    "bouts_10min",
    "bouts_20min",
    "bouts_30min",
    "bout_length_min",
    "bout_length_max",
    "bout_length_mean",
    "bout_length_std",
)
UNTYPED_STEMS = ("transitions", "study_duration_min", "social_duration_min")

STUDY_MIN_BOUT_MIN = 30.0
STUDY_MAX_BIN_STEPS = 10
SOCIAL_MIN_BOUT_MIN = 20.0
SOCIAL_MIN_VOICE_FRAC = 0.80

_EDGE_EPS = 1e-12


def feature_keys() -> list[str]:
    keys = []
    for stem in TYPED_STEMS:
        for place_type in PLACE_TYPES:
            keys.append(f"{stem}:{place_type}")
    keys.extend(UNTYPED_STEMS)
    return keys


@dataclass(frozen=True)
class PlacePolygon:
    place_type: str
    vertices: tuple[GeoPoint, ...]  # implicitly closed ring, >= 3 vertices


@dataclass(frozen=True)
class PlaceMap:
    polygons: tuple[PlacePolygon, ...]

    @classmethod
    def from_json(cls, path: Path | str) -> "PlaceMap":
        """Load `[{"type": ..., "polygon": [[lat, lon], ...]}, ...]`."""
        path = Path(path)
        if not path.exists():
            raise IngestError(f"place map not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: {exc}") from exc
        if not isinstance(doc, list):
            raise IngestError(f"{path}: expected a top-level array of features")
        polys = []
        for i, feature in enumerate(doc):
            ptype = feature.get("type")
            ring = feature.get("polygon")
            if ptype not in PLACE_TYPES:
                raise IngestError(f"{path}: feature {i}: unknown type {ptype!r}")
            if not isinstance(ring, list) or len(ring) < 3:
                raise IngestError(f"{path}: feature {i}: polygon needs >= 3 vertices")
            polys.append(PlacePolygon(ptype, tuple(GeoPoint(float(a), float(b)) for a, b in ring)))
        return cls(polygons=tuple(polys))


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > _EDGE_EPS:
        return False
    return min(ax, bx) - _EDGE_EPS <= px <= max(ax, bx) + _EDGE_EPS and (
        min(ay, by) - _EDGE_EPS <= py <= max(ay, by) + _EDGE_EPS
    )


def _point_in_ring(p: GeoPoint, ring: Sequence[GeoPoint]) -> bool:
    """Even-odd ray casting in the (lon, lat) plane; boundary counts as inside.

    Containment is invariant under the axis scaling of a local equirectangular
    projection, so the test runs directly on degree coordinates.
    """
    x, y = p.longitude, p.latitude
    inside = False
    n = len(ring)
    j = n - 1
    for i in range(n):
        xi, yi = ring[i].longitude, ring[i].latitude
        xj, yj = ring[j].longitude, ring[j].latitude
        if _on_segment(x, y, xi, yi, xj, yj):
            return True
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


def point_in_place(p: GeoPoint, place_map: PlaceMap) -> str:
    """Place type at a point: first containing polygon in file order, else off_campus."""
    for poly in place_map.polygons:
        if _point_in_ring(p, poly.vertices):
            return poly.place_type
    return "off_campus"


@dataclass(frozen=True)
class PlaceBout:
    place_type: str
    start: int  # UTC ms of the first fix
    end: int  # UTC ms the attribution ends (last fix + capped outgoing gap)
    duration_min: float


class PlaceLabeler:
    """point_in_place with a per-coordinate cache; fixes repeat coordinates a lot."""

    def __init__(self, place_map: PlaceMap):
        self._map = place_map
        self._cache: dict[tuple[float, float], str] = {}

    def label(self, p: GeoPoint) -> str:
        key = (p.latitude, p.longitude)
        got = self._cache.get(key)
        if got is None:
            got = point_in_place(p, self._map)
            self._cache[key] = got
        return got


def place_bouts(
    fixes_in_slice: Sequence[LocationFix],
    labeler: PlaceLabeler,
    gap_cap_s: float,
) -> tuple[list[PlaceBout], int]:
    """Maximal same-type bouts and the count of type transitions.

    A transition is an adjacent fix pair with differing types. A trailing
    bout with no following sample keeps duration 0: it still counts as a
    bout, there just is no attributable dwell yet.
    """
    bouts: list[PlaceBout] = []
    transitions = 0
    n = len(fixes_in_slice)
    cur_type: str | None = None
    cur_start = 0
    cur_end = 0
    cur_dur_s = 0.0

    def flush():
        nonlocal cur_type, cur_dur_s
        if cur_type is not None:
            bouts.append(
                PlaceBout(place_type=cur_type, start=cur_start, end=cur_end, duration_min=cur_dur_s / 60.0)
            )
        cur_type = None
        cur_dur_s = 0.0

    prev_type: str | None = None
    for i, f in enumerate(fixes_in_slice):
        ptype = labeler.label(f.point)
        if prev_type is not None and ptype != prev_type:
            transitions += 1
        prev_type = ptype

        if ptype != cur_type:
            flush()
            cur_type = ptype
            cur_start = f.timestamp
            cur_end = f.timestamp
        gap_s = (fixes_in_slice[i + 1].timestamp - f.timestamp) / 1000.0 if i + 1 < n else None
        c = min(gap_s, gap_cap_s) if gap_s is not None else 0.0
        cur_dur_s += c
        cur_end = f.timestamp + int(c * 1000)
        if gap_s is not None and gap_s > gap_cap_s:
            flush()
    flush()
    return bouts, transitions


def place_features(
    fixes_in_slice: Sequence[LocationFix],
    labeler: PlaceLabeler,
    gap_cap_s: float,
) -> dict[str, float]:
    """Per-type dwell, bout counts and length stats, plus type transitions.

    Counts and dwell are observed zeros even for an empty slice; ratio and
    length statistics stay missing until there is something to measure.
    """
    bouts, transitions = place_bouts(fixes_in_slice, labeler, gap_cap_s)
    out: dict[str, float] = {"transitions": float(transitions)}

    total_dwell = sum(b.duration_min for b in bouts)
    for place_type in PLACE_TYPES:
        mine = [b for b in bouts if b.place_type == place_type]
        dwell = sum(b.duration_min for b in mine)
        out[f"dwell_min:{place_type}"] = dwell
        out[f"bouts:{place_type}"] = float(len(mine))
        out[f"bouts_10min:{place_type}"] = float(sum(1 for b in mine if b.duration_min >= 10.0))
        out[f"bouts_20min:{place_type}"] = float(sum(1 for b in mine if b.duration_min >= 20.0))
        out[f"bouts_30min:{place_type}"] = float(sum(1 for b in mine if b.duration_min >= 30.0))
        if total_dwell > 0:
            out[f"dwell_pct:{place_type}"] = 100.0 * dwell / total_dwell
        if mine:
            lengths = np.asarray([b.duration_min for b in mine])
            out[f"bout_length_min:{place_type}"] = float(lengths.min())
            out[f"bout_length_max:{place_type}"] = float(lengths.max())
            out[f"bout_length_mean:{place_type}"] = float(lengths.mean())
            out[f"bout_length_std:{place_type}"] = float(lengths.std())
    return out


def _overlaps(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return a_start < b_end and b_start < a_end


def study_duration_min(
    bouts: Sequence[PlaceBout],
    steps: Sequence[StepBin],
    interaction_bouts: Sequence,
) -> float:
    """Minutes of qualifying academic bouts (sedentary, phone untouched).

    `interaction_bouts` are the screen module's interaction intervals for the
    whole study. Step bins are checked wherever they overlap the bout; a bout
    with no overlapping bins counts as sedentary.
    """
    total = 0.0
    for bout in bouts:
        if bout.place_type != "academic" or bout.duration_min < STUDY_MIN_BOUT_MIN:
            continue
        sedentary = all(
            b.steps < STUDY_MAX_BIN_STEPS
            for b in steps
            if _overlaps(bout.start, bout.end, b.start, b.start + STEP_BIN_MS)
        )
        if not sedentary:
            continue
        if any(_overlaps(bout.start, bout.end, ib.start, ib.end) for ib in interaction_bouts):
            continue
        total += bout.duration_min
    return total


def social_duration_min(
    bouts: Sequence[PlaceBout],
    conversation: Sequence[ConversationInference],
) -> float:
    """Minutes of qualifying social bouts (housing/green space, mostly voices).

    The voice fraction counts inferences timestamped inside the bout; a bout
    containing no inferences does not qualify.
    """
    total = 0.0
    for bout in bouts:
        if bout.place_type not in SOCIAL_TYPES or bout.duration_min < SOCIAL_MIN_BOUT_MIN:
            continue
        inside = [c for c in conversation if bout.start <= c.timestamp < bout.end]
        if not inside:
            continue
        voice = sum(1 for c in inside if c.label in ("voice", "noise"))
        if voice / len(inside) >= SOCIAL_MIN_VOICE_FRAC:
            total += bout.duration_min
    return total
