"""Parse, validate, and order raw per-participant sensor CSV files.

One CSV file per sensor per participant, UTF-8 with a fixed header row.
Malformed or out-of-range rows are skipped and counted (field data is dirty);
a missing file or wrong header is a structural error and raises IngestError.
Loaded streams come back sorted by timestamp with exact duplicates dropped,
so no downstream module ever sees unsorted or duplicated records.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .errors import IngestError
from .numerics import GeoPoint
from .records import (
    CALL_DIRECTIONS,
    CONTACT_CATEGORIES,
    CONVERSATION_LABELS,
    MINUTE_MS,
    SCREEN_STATUSES,
    SLEEP_STATES,
    STEP_BIN_MS,
    BluetoothScan,
    CallRecord,
    ConversationInference,
    LocationFix,
    ScreenEvent,
    SleepMinute,
    StepBin,
)

log = logging.getLogger(__name__)

MAX_REPORTED_ISSUES = 50

GAP_BUCKETS = (
    ("lt_1m", 60_000),
    ("1m_5m", 300_000),
    ("5m_30m", 1_800_000),
    ("30m_2h", 7_200_000),
    ("ge_2h", None),
)


def _parse_ts(text: str) -> int:
    ts = int(text)
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    return ts


def _parse_bluetooth(row: list[str]) -> BluetoothScan:
    address = row[1].strip()
    if not address:
        raise ValueError("empty address")
    return BluetoothScan(timestamp=_parse_ts(row[0]), address=address)


def _parse_call(row: list[str]) -> CallRecord:
    direction = row[2].strip()
    if direction not in CALL_DIRECTIONS:
        raise ValueError(f"bad direction {direction!r}")
    duration = float(row[3])
    if duration < 0:
        raise ValueError(f"negative duration {duration}")
    if direction == "missed":
        duration = 0.0  # a missed call has no talk time
    return CallRecord(
        timestamp=_parse_ts(row[0]),
        correspondent=row[1].strip(),
        direction=direction,
        duration_s=duration,
    )


def _parse_location(row: list[str]) -> LocationFix:
    return LocationFix(timestamp=_parse_ts(row[0]), point=GeoPoint(float(row[1]), float(row[2])))


def _parse_screen(row: list[str]) -> ScreenEvent:
    status = row[1].strip()
    if status not in SCREEN_STATUSES:
        raise ValueError(f"bad status {status!r}")
    return ScreenEvent(timestamp=_parse_ts(row[0]), status=status)


def _parse_sleep(row: list[str]) -> SleepMinute:
    state = row[1].strip()
    if state not in SLEEP_STATES:
        raise ValueError(f"bad state {state!r}")
    ts = _parse_ts(row[0])
    return SleepMinute(timestamp=ts - ts % MINUTE_MS, state=state)


def _parse_steps(row: list[str]) -> StepBin:
    steps = int(row[1])
    if steps < 0:
        raise ValueError(f"negative steps {steps}")
    start = _parse_ts(row[0])
    return StepBin(start=start - start % STEP_BIN_MS, steps=steps)


def _parse_conversation(row: list[str]) -> ConversationInference:
    label = row[1].strip()
    if label not in CONVERSATION_LABELS:
        raise ValueError(f"bad label {label!r}")
    return ConversationInference(timestamp=_parse_ts(row[0]), label=label)


@dataclass(frozen=True)
class SensorSchema:
    kind: str
    filename: str
    header: tuple[str, ...]
    parse: Callable[[list[str]], object]


SCHEMAS: dict[str, SensorSchema] = {
    s.kind: s
    for s in (
        SensorSchema("bluetooth", "bluetooth.csv", ("timestamp", "address"), _parse_bluetooth),
        SensorSchema("calls", "calls.csv", ("timestamp", "correspondent", "direction", "duration_s"), _parse_call),
        SensorSchema("location", "location.csv", ("timestamp", "lat", "lon"), _parse_location),
        SensorSchema("screen", "screen.csv", ("timestamp", "status"), _parse_screen),
        SensorSchema("sleep", "sleep.csv", ("timestamp", "state"), _parse_sleep),
        SensorSchema("steps", "steps.csv", ("start_timestamp", "steps"), _parse_steps),
        SensorSchema("conversation", "conversation.csv", ("timestamp", "label"), _parse_conversation),
    )
}

CONTACTS_FILENAME = "contacts.csv"
CONTACTS_HEADER = ("correspondent", "category")


@dataclass
class LoadResult:
    records: list
    rejected: int
    issues: list[str] = field(default_factory=list)


def load_stream(path: Path | str, kind: str) -> LoadResult:
    """Load one sensor CSV into sorted, de-duplicated records.

    Bad rows are skipped and counted, each reported with its line number (up
    to a cap). Sleep timestamps are floored to the minute and step-bin starts
    to the 5-minute grid; a second step bin landing on an occupied start is
    rejected to keep bins non-overlapping.
    """
    schema = SCHEMAS[kind]
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing sensor file: {path}")

    records = []
    rejected = 0
    issues: list[str] = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected header {','.join(schema.header)}")
        if tuple(h.strip() for h in header) != schema.header:
            raise IngestError(f"{path}: header {header!r} does not match {schema.header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(schema.header):
                rejected += 1
                if len(issues) < MAX_REPORTED_ISSUES:
                    issues.append(f"{path.name}:{lineno}: expected {len(schema.header)} fields, got {len(row)}")
                continue
            try:
                records.append(schema.parse(row))
            except (ValueError, TypeError) as exc:
                rejected += 1
                if len(issues) < MAX_REPORTED_ISSUES:
                    issues.append(f"{path.name}:{lineno}: {exc}")

    records.sort(key=lambda r: r.timestamp)
    seen: set = set()
    deduped = []
    for r in records:
        if r in seen:
            continue
        seen.add(r)
        deduped.append(r)

    if kind == "steps":
        deduped, extra = _drop_overlapping_bins(deduped, issues)
        rejected += extra

    if rejected:
        log.info("%s: %d row(s) rejected", path, rejected)
    return LoadResult(records=deduped, rejected=rejected, issues=issues)


def _drop_overlapping_bins(bins: list[StepBin], issues: list[str]) -> tuple[list[StepBin], int]:
    kept: list[StepBin] = []
    dropped = 0
    for b in bins:
        if kept and b.start < kept[-1].start + STEP_BIN_MS:
            dropped += 1
            if len(issues) < MAX_REPORTED_ISSUES:
                issues.append(f"steps bin at {b.start} overlaps previous bin, dropped")
            continue
        kept.append(b)
    return kept, dropped


def load_contacts(path: Path | str) -> tuple[dict[str, str], int, list[str]]:
    """contacts.csv -> correspondent -> category map (first entry wins)."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing contacts file: {path}")
    mapping: dict[str, str] = {}
    rejected = 0
    issues: list[str] = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CONTACTS_HEADER:
            raise IngestError(f"{path}: header {header!r} does not match {CONTACTS_HEADER!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip() or row[1].strip() not in CONTACT_CATEGORIES:
                rejected += 1
                if len(issues) < MAX_REPORTED_ISSUES:
                    issues.append(f"{path.name}:{lineno}: bad contact row {row!r}")
                continue
            mapping.setdefault(row[0].strip(), row[1].strip())
    return mapping, rejected, issues


@dataclass
class ParticipantData:
    """All loaded streams for one participant. Absent files load as empty."""

    participant: str
    bluetooth: list[BluetoothScan] = field(default_factory=list)
    calls: list[CallRecord] = field(default_factory=list)
    location: list[LocationFix] = field(default_factory=list)
    screen: list[ScreenEvent] = field(default_factory=list)
    sleep: list[SleepMinute] = field(default_factory=list)
    steps: list[StepBin] = field(default_factory=list)
    conversation: list[ConversationInference] = field(default_factory=list)
    contacts: dict[str, str] = field(default_factory=dict)
    present: set[str] = field(default_factory=set)
    rejected: dict[str, int] = field(default_factory=dict)
    issues: list[str] = field(default_factory=list)

    def stream(self, kind: str) -> list:
        return getattr(self, kind)


def load_participant(directory: Path | str) -> ParticipantData:
    """Load every sensor file found under `<participant>/`."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"participant directory not found: {directory}")
    data = ParticipantData(participant=directory.name)
    for kind, schema in SCHEMAS.items():
        path = directory / schema.filename
        if not path.exists():
            continue
        result = load_stream(path, kind)
        setattr(data, kind, result.records)
        data.present.add(kind)
        data.rejected[kind] = result.rejected
        data.issues.extend(result.issues)
    contacts_path = directory / CONTACTS_FILENAME
    if contacts_path.exists():
        mapping, rejected, issues = load_contacts(contacts_path)
        data.contacts = mapping
        data.present.add("contacts")
        data.rejected["contacts"] = rejected
        data.issues.extend(issues)
    return data


@dataclass
class SensorCoverage:
    present: bool
    records: int = 0
    rejected: int = 0
    first_timestamp: int | None = None
    last_timestamp: int | None = None
    coverage_pct: float | None = None
    gap_histogram: dict[str, int] = field(default_factory=dict)


@dataclass
class ValidationReport:
    participant: str
    sensors: dict[str, SensorCoverage]
    issues: list[str]

    def to_dict(self) -> dict:
        return {
            "participant": self.participant,
            "sensors": {
                k: {
                    "present": c.present,
                    "records": c.records,
                    "rejected": c.rejected,
                    "first_timestamp": c.first_timestamp,
                    "last_timestamp": c.last_timestamp,
                    "coverage_pct": c.coverage_pct,
                    "gap_histogram": c.gap_histogram,
                }
                for k, c in self.sensors.items()
            },
            "issues": self.issues,
        }


def validate_dataset(data: ParticipantData) -> ValidationReport:
    """Per-sensor coverage report; always succeeds, absent sensors included."""
    sensors: dict[str, SensorCoverage] = {}
    for kind in SCHEMAS:
        stream = data.stream(kind)
        if kind not in data.present:
            sensors[kind] = SensorCoverage(present=False)
            continue
        cov = SensorCoverage(present=True, records=len(stream), rejected=data.rejected.get(kind, 0))
        if stream:
            ts = [r.timestamp for r in stream]
            cov.first_timestamp = ts[0]
            cov.last_timestamp = ts[-1]
            cov.gap_histogram = _gap_histogram(ts)
            cov.coverage_pct = _coverage_pct(ts)
        sensors[kind] = cov
    return ValidationReport(participant=data.participant, sensors=sensors, issues=list(data.issues))


def _gap_histogram(timestamps: Sequence[int]) -> dict[str, int]:
    hist = {label: 0 for label, _ in GAP_BUCKETS}
    for a, b in zip(timestamps, timestamps[1:]):
        gap = b - a
        for label, upper in GAP_BUCKETS:
            if upper is None or gap < upper:
                hist[label] += 1
                break
    return hist


def _coverage_pct(timestamps: Sequence[int]) -> float:
    """Heuristic: observed samples x median cadence over the recorded span."""
    if len(timestamps) < 2:
        return 100.0
    span = timestamps[-1] - timestamps[0]
    if span <= 0:
        return 100.0
    gaps = sorted(b - a for a, b in zip(timestamps, timestamps[1:]))
    median_gap = gaps[len(gaps) // 2]
    return min(100.0, 100.0 * len(timestamps) * median_gap / span)
