"""Typed records for the raw sensor streams, one variant per channel."""

from __future__ import annotations

from dataclasses import dataclass

from .numerics import GeoPoint

CALL_DIRECTIONS = ("incoming", "outgoing", "missed")
SCREEN_STATUSES = ("on", "off", "lock", "unlock")
SLEEP_STATES = ("asleep", "restless", "awake", "unknown")
CONVERSATION_LABELS = ("voice", "noise", "silence", "unknown")
CONTACT_CATEGORIES = ("family", "friend_off_campus", "friend_on_campus", "other")

MINUTE_MS = 60_000
STEP_BIN_MS = 5 * MINUTE_MS


@dataclass(frozen=True, slots=True)
class BluetoothScan:
    timestamp: int  # UTC ms
    address: str


@dataclass(frozen=True, slots=True)
class CallRecord:
    timestamp: int
    correspondent: str
    direction: str
    duration_s: float


@dataclass(frozen=True, slots=True)
class LocationFix:
    timestamp: int
    point: GeoPoint


@dataclass(frozen=True, slots=True)
class ScreenEvent:
    timestamp: int
    status: str


@dataclass(frozen=True, slots=True)
class SleepMinute:
    timestamp: int  # minute-aligned after ingestion
    state: str


@dataclass(frozen=True, slots=True)
class StepBin:
    start: int  # UTC ms, 5-minute aligned after ingestion
    steps: int

    @property
    def timestamp(self) -> int:
        """Slice assignment goes by the bin's start."""
        return self.start


@dataclass(frozen=True, slots=True)
class ConversationInference:
    timestamp: int
    label: str
