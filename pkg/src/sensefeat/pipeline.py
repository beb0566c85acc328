"""End-to-end extraction: ingest, window, compute, change features, emit.

Per participant: load streams, run the study-level computations once
(bluetooth ownership, global places, home, screen bouts), then walk every
slice emitting one row per catalog feature. Weekly values feed the change
features at the end. Participants are independent, so a worker pool can fan
out across them; the final sort in the writer makes output independent of
scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .catalog import change_name, feature_name, resolve_sensors, sensor_keys
from .change import CHANGE_FIELDS, WeeklySeries, change_features
from .config import StudyConfig
from .features import bluetooth as bt
from .features import calls as calls_mod
from .features import fitbit, location as loc
from .features import places as places_mod
from .features import screen as screen_mod
from .ingest import load_participant, validate_dataset
from .output import FeatureRow, write_manifest, write_matrix, write_report
from .windowing import EPOCHS, GRANULARITIES, TimeSlice, assign, build_slices, night_bounds

log = logging.getLogger(__name__)


@dataclass
class ParticipantOutcome:
    participant: str
    status: str  # "ok" | "failed"
    error: str | None = None
    rows: list[FeatureRow] = field(default_factory=list)
    rejected: dict[str, int] = field(default_factory=dict)

    def status_dict(self) -> dict:
        return {
            "participant": self.participant,
            "status": self.status,
            "error": self.error,
            "rejected_rows": dict(sorted(self.rejected.items())),
        }


def extract_participant(
    participant_dir: str | Path,
    config: StudyConfig,
    sensors: Sequence[str],
    epochs: Sequence[str] | None,
    granularities: Sequence[str] | None,
    seed: int,
) -> ParticipantOutcome:
    directory = Path(participant_dir)
    pid = directory.name
    try:
        rows, rejected = _extract(directory, config, sensors, epochs, granularities, seed)
        return ParticipantOutcome(participant=pid, status="ok", rows=rows, rejected=rejected)
    except Exception as exc:  # any per-participant failure downgrades to a partial run
        log.error("participant %s failed: %s", pid, exc)
        return ParticipantOutcome(participant=pid, status="failed", error=str(exc))


def _extract(directory, config, sensors, epochs, granularities, seed):
    data = load_participant(directory)
    pid = data.participant
    if log.isEnabledFor(logging.INFO):
        report = validate_dataset(data)
        for kind, cov in report.sensors.items():
            if cov.present:
                log.info("%s/%s: %d records, %d rejected", pid, kind, cov.records, cov.rejected)
            else:
                log.info("%s/%s: absent", pid, kind)
    params = config.location
    slices = build_slices(config, epochs, granularities)

    # study-level precomputation, shared read-only by the per-slice loop
    ownership = None
    if "bluetooth" in sensors and data.bluetooth:
        ownership = bt.cluster_devices(data.bluetooth, seed=seed, tz=config.tzinfo)

    samples: list[loc.MotionSample] = []
    global_clustering = None
    global_rank = None
    home = None
    if ("location" in sensors or "places" in sensors) and data.location:
        samples = loc.label_motion(data.location, params)
        global_clustering = loc.significant_places(samples, params)
        global_rank = loc.study_dwell_rank(samples, global_clustering, params.gap_cap_s)
        home = loc.infer_home(data.location, night_bounds(config), params)

    screen_bouts = screen_mod.extract_bouts(data.screen) if data.screen else []

    labeler = None
    if "places" in sensors and config.place_map is not None:
        labeler = places_mod.PlaceLabeler(places_mod.PlaceMap.from_json(config.place_map))

    key_index = {
        "bluetooth": [r.timestamp for r in data.bluetooth],
        "calls": [r.timestamp for r in data.calls],
        "location": [r.timestamp for r in data.location],
        "screen": [r.timestamp for r in data.screen],
        "sleep": [r.timestamp for r in data.sleep],
        "steps": [r.timestamp for r in data.steps],
    }
    sample_ts = [s.timestamp for s in samples]

    rows: list[FeatureRow] = []
    weekly: dict[tuple[str, str, str], dict[int, float | None]] = {}

    def emit(sensor: str, sl: TimeSlice, feats: dict[str, float]):
        for key in sensor_keys(sensor):
            value = feats.get(key)
            rows.append(
                FeatureRow(
                    participant=pid,
                    feature=feature_name(sensor, key, sl.epoch, sl.granularity),
                    slice_id=sl.slice_id,
                    value=value,
                )
            )
            if sl.granularity == "weekly" and sl.index <= config.weeks_n:
                weekly.setdefault((sensor, key, sl.epoch), {})[sl.index] = value

    for sl in slices:
        if "bluetooth" in sensors:
            feats = {}
            if ownership is not None:
                feats = bt.bluetooth_features(assign(data.bluetooth, sl, key_index["bluetooth"]), ownership)
            emit("bluetooth", sl, feats)

        if "calls" in sensors:
            feats = {}
            if "calls" in data.present:
                feats = calls_mod.call_features(assign(data.calls, sl, key_index["calls"]), data.contacts)
            emit("calls", sl, feats)

        if "location" in sensors:
            feats = {}
            if samples:
                in_slice = assign(samples, sl, sample_ts)
                local = loc.significant_places(in_slice, params) if in_slice else None
                feats = loc.location_features(in_slice, global_clustering, local, global_rank, home, params)
            emit("location", sl, feats)

        if "places" in sensors and labeler is not None:
            feats = {}
            if "location" in data.present:
                fixes = assign(data.location, sl, key_index["location"])
                feats = places_mod.place_features(fixes, labeler, params.gap_cap_s)
                bouts, _ = places_mod.place_bouts(fixes, labeler, params.gap_cap_s)
                if "steps" in data.present and "screen" in data.present:
                    feats["study_duration_min"] = places_mod.study_duration_min(
                        bouts, data.steps, [b for b in screen_bouts if b.kind == "interaction"]
                    )
                if "conversation" in data.present:
                    feats["social_duration_min"] = places_mod.social_duration_min(bouts, data.conversation)
            emit("places", sl, feats)

        if "screen" in sensors:
            feats = {}
            if data.screen:
                events = assign(data.screen, sl, key_index["screen"])
                feats = screen_mod.usage_features(events, screen_bouts, sl, config)
            emit("screen", sl, feats)

        if "sleep" in sensors:
            feats = {}
            if data.sleep:
                feats = fitbit.sleep_features(assign(data.sleep, sl, key_index["sleep"]))
            emit("sleep", sl, feats)

        if "steps" in sensors:
            feats = {}
            if data.steps:
                feats = fitbit.steps_features(assign(data.steps, sl, key_index["steps"]))
            emit("steps", sl, feats)

    use_grans = tuple(granularities) if granularities is not None else GRANULARITIES
    use_epochs = tuple(epochs) if epochs is not None else EPOCHS
    if "weekly" in use_grans:
        n = config.weeks_n
        for sensor in sensors:
            for key in sensor_keys(sensor):
                for epoch in use_epochs:
                    values = weekly.get((sensor, key, epoch), {})
                    series = WeeklySeries(
                        feature=f"{sensor}:{key}:{epoch}",
                        values=tuple(values.get(w) for w in range(1, n + 1)),
                        midpoint=config.weeks_m,
                    )
                    cf = change_features(series).as_dict()
                    for field_name in CHANGE_FIELDS:
                        rows.append(
                            FeatureRow(
                                participant=pid,
                                feature=change_name(sensor, key, epoch, field_name),
                                slice_id=f"{epoch}:full_term:001",
                                value=cf[field_name],
                            )
                        )
    return rows, dict(data.rejected)


def _worker(task: tuple) -> ParticipantOutcome:
    directory, config, sensors, epochs, granularities, seed = task
    return extract_participant(directory, config, sensors, epochs, granularities, seed)


def run_extraction(
    config: StudyConfig,
    input_dir: str | Path,
    output: str | Path,
    fmt: str = "csv",
    sensors: Sequence[str] | None = None,
    participants: Sequence[str] | None = None,
    epochs: Sequence[str] | None = None,
    granularities: Sequence[str] | None = None,
    seed: int = 42,
    jobs: int = 1,
) -> int:
    """Run the full pipeline; returns the process exit code (0 ok, 2 partial)."""
    input_dir = Path(input_dir)
    output = Path(output)
    use_sensors = resolve_sensors(config, sensors)
    if "places" in use_sensors:
        # a broken study-level map is a configuration error, not a per-participant one
        places_mod.PlaceMap.from_json(config.place_map)

    dirs = sorted(d for d in input_dir.iterdir() if d.is_dir())
    if participants is not None:
        wanted = set(participants)
        dirs = [d for d in dirs if d.name in wanted]
    log.info("extracting %d participant(s) with sensors: %s", len(dirs), ", ".join(use_sensors))

    tasks = [(d, config, use_sensors, epochs, granularities, seed) for d in dirs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_worker, tasks))
    else:
        outcomes = [_worker(t) for t in tasks]

    rows: list[FeatureRow] = []
    for o in outcomes:
        rows.extend(o.rows)
    write_matrix(rows, output, fmt=fmt)

    statuses = [o.status_dict() for o in outcomes]
    write_report(Path(str(output) + ".report.json"), statuses)

    inventory = []
    for d in dirs:
        for f in sorted(d.iterdir()):
            if f.is_file():
                inventory.append((str(f.relative_to(input_dir)), f.stat().st_size))
    if config.place_map is not None and Path(config.place_map).exists():
        inventory.append((config.place_map, Path(config.place_map).stat().st_size))
    write_manifest(
        Path(str(output) + ".manifest.json"),
        config_sha256=config.config_sha256,
        config_dict=config.to_dict(),
        seed=seed,
        version=__version__,
        inventory=inventory,
        statuses=statuses,
        row_count=len(rows),
    )

    failed = [o for o in outcomes if o.status != "ok"]
    if failed:
        log.warning("%d participant(s) failed", len(failed))
        return 2
    return 0
