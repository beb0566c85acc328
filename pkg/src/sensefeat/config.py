"""Study configuration: the TOML file that drives slicing and extraction."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError


@dataclass(frozen=True)
class LocationParams:
    eps_m: float = 30.0
    min_pts: int = 5
    speed_threshold_kmh: float = 1.0
    gap_cap_s: float = 300.0


@dataclass(frozen=True)
class StudyConfig:
    """Resolved study parameters.

    `start` and `end` are both study days (end inclusive). `half_term_split`
    is the first day of the second half. `weeks_n` is the length of the
    weekly series used for change features; `weeks_m` the midpoint week that
    belongs to both halves.
    """

    start: date
    end: date
    timezone: str
    half_term_split: date
    weeks_n: int
    weeks_m: int
    location: LocationParams = field(default_factory=LocationParams)
    place_map: str | None = None
    config_sha256: str | None = None

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    def days(self) -> list[date]:
        n = (self.end - self.start).days + 1
        return [self.start + timedelta(days=i) for i in range(n)]

    def week_keys(self) -> list[tuple[int, int]]:
        """ISO (year, week) pairs covering the study, in order."""
        keys: list[tuple[int, int]] = []
        for d in self.days():
            iso = d.isocalendar()
            key = (iso[0], iso[1])
            if not keys or keys[-1] != key:
                keys.append(key)
        return keys

    def to_dict(self) -> dict:
        return {
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "timezone": self.timezone,
            "half_term_split": self.half_term_split.isoformat(),
            "weeks_n": self.weeks_n,
            "weeks_m": self.weeks_m,
            "location": {
                "eps_m": self.location.eps_m,
                "min_pts": self.location.min_pts,
                "speed_threshold_kmh": self.location.speed_threshold_kmh,
                "gap_cap_s": self.location.gap_cap_s,
            },
            "place_map": self.place_map,
        }


def _as_date(value, key: str) -> date:
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    raise ConfigError(f"{key} must be a date, got {value!r}")


def build_config(
    start,
    end,
    timezone: str,
    half_term_split=None,
    weeks_n: int | None = None,
    weeks_m: int | None = None,
    location: LocationParams | None = None,
    place_map: str | None = None,
    config_sha256: str | None = None,
) -> StudyConfig:
    start = _as_date(start, "start")
    end = _as_date(end, "end")
    if end < start:
        raise ConfigError(f"end {end} precedes start {start}")
    try:
        ZoneInfo(timezone)
    except Exception as exc:
        raise ConfigError(f"unknown timezone {timezone!r}") from exc

    n_days = (end - start).days + 1
    if half_term_split is None:
        split = min(start + timedelta(days=max(1, (n_days + 1) // 2)), end)
    else:
        split = _as_date(half_term_split, "half_term_split")
        if not (start < split < end):
            raise ConfigError(f"half_term_split {split} must fall strictly inside ({start}, {end})")

    probe = StudyConfig(start=start, end=end, timezone=timezone, half_term_split=split, weeks_n=1, weeks_m=1)
    derived_weeks = len(probe.week_keys())
    if weeks_n is None:
        n = derived_weeks
    else:
        if weeks_n < 1:
            raise ConfigError(f"weeks_n must be >= 1, got {weeks_n}")
        n = min(weeks_n, derived_weeks)
    if weeks_m is None:
        m = max(1, math.ceil(n / 2))
    else:
        if not (1 <= weeks_m <= n):
            raise ConfigError(f"weeks_m must be within [1, {n}], got {weeks_m}")
        m = weeks_m

    return StudyConfig(
        start=start,
        end=end,
        timezone=timezone,
        half_term_split=split,
        weeks_n=n,
        weeks_m=m,
        location=location or LocationParams(),
        place_map=place_map,
        config_sha256=config_sha256,
    )


def load_config(path: Path | str) -> StudyConfig:
    """Parse a study TOML file; see README for the key reference."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for key in ("start", "end", "timezone"):
        if key not in doc:
            raise ConfigError(f"{path}: missing required key {key!r}")

    loc_doc = doc.get("location", {})
    if not isinstance(loc_doc, dict):
        raise ConfigError(f"{path}: [location] must be a table")
    defaults = LocationParams()
    try:
        location = LocationParams(
            eps_m=float(loc_doc.get("eps_m", defaults.eps_m)),
            min_pts=int(loc_doc.get("min_pts", defaults.min_pts)),
            speed_threshold_kmh=float(loc_doc.get("speed_threshold_kmh", defaults.speed_threshold_kmh)),
            gap_cap_s=float(loc_doc.get("gap_cap_s", defaults.gap_cap_s)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad [location] value: {exc}") from exc
    if location.eps_m <= 0 or location.min_pts < 1 or location.gap_cap_s <= 0:
        raise ConfigError(f"{path}: [location] values out of range")

    places_doc = doc.get("places", {})
    place_map = places_doc.get("map") if isinstance(places_doc, dict) else None
    if place_map is not None:
        place_map = str((path.parent / place_map).resolve())

    return build_config(
        start=doc["start"],
        end=doc["end"],
        timezone=str(doc["timezone"]),
        half_term_split=doc.get("half_term_split"),
        weeks_n=doc.get("weeks_n"),
        weeks_m=doc.get("weeks_m"),
        location=location,
        place_map=place_map,
        config_sha256=hashlib.sha256(raw).hexdigest(),
    )
