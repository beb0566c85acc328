"""Feature matrix serialization, run report, and run manifest.

Long format, one row per (participant, feature, slice). MISSING is a first
class value distinct from 0: an empty CSV field, a JSON null. Rows are
sorted before writing so output bytes never depend on worker scheduling.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError

CSV_HEADER = "participant,feature,slice,value"


@dataclass(frozen=True)
class FeatureRow:
    participant: str
    feature: str
    slice_id: str
    value: float | None  # None = MISSING

    def sort_key(self) -> tuple[str, str, str]:
        return (self.participant, self.feature, self.slice_id)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _format_value(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_matrix(rows: Iterable[FeatureRow], path: Path | str, fmt: str = "csv") -> None:
    """Serialize rows sorted by (participant, feature, slice), atomically."""
    path = Path(path)
    ordered = sorted(rows, key=FeatureRow.sort_key)
    if fmt == "csv":
        lines = [CSV_HEADER]
        for r in ordered:
            lines.append(f"{r.participant},{r.feature},{r.slice_id},{_format_value(r.value)}")
        _atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "jsonl":
        lines = []
        for r in ordered:
            value = float(r.value) if r.value is not None else None
            lines.append(
                json.dumps(
                    {"participant": r.participant, "feature": r.feature, "slice": r.slice_id, "value": value}
                )
            )
        _atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


def read_matrix_jsonl(path: Path | str) -> list[FeatureRow]:
    """Parse a jsonl matrix back into rows (round-trip support)."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        doc = json.loads(line)
        rows.append(
            FeatureRow(
                participant=doc["participant"],
                feature=doc["feature"],
                slice_id=doc["slice"],
                value=doc["value"],
            )
        )
    return rows


def write_report(path: Path | str, statuses: Sequence[dict]) -> None:
    """Per-participant status report at `<output>.report.json`."""
    doc = {
        "participants": sorted(statuses, key=lambda s: s["participant"]),
        "failed": sorted(s["participant"] for s in statuses if s["status"] != "ok"),
    }
    _atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_manifest(
    path: Path | str,
    *,
    config_sha256: str | None,
    config_dict: dict,
    seed: int,
    version: str,
    inventory: Sequence[tuple[str, int]],
    statuses: Sequence[dict],
    row_count: int,
) -> None:
    """Run manifest at `<output>.manifest.json`, written atomically at run end.

    `completed_at` is wall-clock and is the only field excluded from
    byte-determinism comparisons.
    """
    doc = {
        "tool": "sensefeat",
        "version": version,
        "seed": seed,
        "config_sha256": config_sha256,
        "config": config_dict,
        "inputs": [{"path": p, "bytes": n} for p, n in sorted(inventory)],
        "participants": sorted(statuses, key=lambda s: s["participant"]),
        "rows": row_count,
        "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")
