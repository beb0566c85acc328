"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. Every tolerance is pinned
here; the statistical criteria use fixed seeds.
"""

import json
import math
import time
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from sensefeat.change import WeeklySeries, change_features
from sensefeat.cli import main
from sensefeat.config import build_config
from sensefeat.features.bluetooth import cluster_devices
from sensefeat.features.fitbit import activity_bouts, sleep_features
from sensefeat.features.location import (
    circadian_movement,
    label_motion,
    location_features,
    significant_places,
)
from sensefeat.config import LocationParams
from sensefeat.features.places import PlaceLabeler, PlaceMap, place_bouts, social_duration_min, study_duration_min
from sensefeat.features.screen import InteractionBout
from sensefeat.numerics import EARTH_RADIUS_M, GeoPoint, dbscan
from sensefeat.records import (
    BluetoothScan,
    ConversationInference,
    LocationFix,
    SleepMinute,
    StepBin,
)
from sensefeat.windowing import assign, build_slices

from fixture_data import build_dataset
from oracles import dbscan_labels, segment_step_bins
from test_places import MAP, IN_ACADEMIC, IN_GREEN, fixes_at

DAY_MS = 86_400_000
MIN_MS = 60_000


def report(n, text):
    print(f"\nACCEPTANCE {n:02d} PASS: {text}")


def test_criterion_01_bluetooth_pipeline():
    t0 = time.perf_counter()
    scans = []
    for d in range(14):
        for i in range(100):
            scans.append(BluetoothScan(timestamp=d * DAY_MS + i * 30_000, address="A"))
    for d in range(7):
        for i in range(10):
            scans.append(BluetoothScan(timestamp=d * DAY_MS + 3_600_000 + i * 60_000, address="B"))
    scans.append(BluetoothScan(timestamp=5 * DAY_MS, address="C"))

    expected = {"A": "self", "B": "related", "C": "others"}
    for shuffle_seed in range(100):
        rng = np.random.default_rng(shuffle_seed)
        shuffled = list(scans)
        rng.shuffle(shuffled)
        ownership = cluster_devices(shuffled, seed=42)
        assert ownership.chosen_k == 3
        assert ownership.labels == expected
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"bluetooth fixture took {elapsed:.2f}s"
    report(1, f"A=self B=related C=others across 100 scan-order shuffles in {elapsed:.2f}s")


def test_criterion_02_dbscan_oracle_equivalence():
    rng = np.random.default_rng(77)
    for trial in range(1000):
        n = int(rng.integers(1, 13))
        dim = int(rng.integers(1, 3))
        pts = rng.uniform(0, 10, size=(n, dim))
        eps = float(rng.uniform(0.3, 5.0))
        min_pts = int(rng.integers(1, 7))
        got = dbscan(pts, eps, min_pts)
        want = dbscan_labels([tuple(p) for p in pts], eps, min_pts)
        assert list(got.labels) == want, f"trial {trial}: {got.labels} != {want}"
    report(2, "labels equal the brute-force density-reachability oracle on 1000 instances (<=12 points)")


def test_criterion_03_sleep_efficiency_formulas():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(50):
        a, r, w, u = (int(x) for x in rng.integers(0, 300, size=4))
        mins = []
        t = 0
        for state, count in (("asleep", a), ("restless", r), ("awake", w), ("unknown", u)):
            for _ in range(count):
                mins.append(SleepMinute(timestamp=t, state=state))
                t += MIN_MS
        out = sleep_features(mins)
        if a + r + w == 0:
            assert "weak_efficiency" not in out
            continue
        weak = (a + r) / (a + r + w)
        strong = a / (a + r + w)
        assert out["weak_efficiency"] == pytest.approx(weak, rel=1e-12)
        assert out["strong_efficiency"] == pytest.approx(strong, rel=1e-12)
        assert out["strong_efficiency"] <= out["weak_efficiency"]
        checked += 1
    assert checked >= 45
    report(3, f"weak/strong efficiency match the closed forms to 1e-12 on {checked} random count vectors")


def test_criterion_04_steps_segmentation_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        values = [int(v) for v in rng.integers(0, 40, size=n)]
        bins = [StepBin(start=i * 300_000, steps=v) for i, v in enumerate(values)]
        bouts = activity_bouts(bins)
        assert [(b.kind, b.bins, b.steps) for b in bouts] == segment_step_bins(values)
        assert sum(b.bins for b in bouts) == len(values)
        assert sum(b.steps for b in bouts) == sum(values)
        for x, y in zip(bouts, bouts[1:]):
            assert x.kind != y.kind
    report(4, "bout tiling, alternation, and step conservation match the single-pass oracle on 200 sequences")


def test_criterion_05_entropy_and_radius_closed_forms():
    params = LocationParams()

    def visit_blobs(lats, equalize=True):
        fixes = []
        t = 0
        for lat in lats:
            fixes.extend(LocationFix(timestamp=t + i * MIN_MS, point=GeoPoint(lat, 0.0)) for i in range(10))
            t += 9 * MIN_MS + 3_600_000
        if equalize:
            fixes.append(LocationFix(timestamp=fixes[-1].timestamp + 300_000, point=fixes[-1].point))
        return label_motion(fixes, params)

    samples = visit_blobs([40.0, 40.01, 40.02, 40.03])
    clustering = significant_places(samples, params)
    assert clustering.n_clusters == 4
    out = location_features(samples, None, clustering, None, None, params)
    assert out["entropy:local"] == pytest.approx(math.log(4), abs=1e-9)
    assert out["normalized_entropy:local"] == pytest.approx(1.0, abs=1e-9)

    for d in (100.0, 1000.0, 10_000.0):
        offset = math.degrees(d / EARTH_RADIUS_M)
        samples = visit_blobs([40.0, 40.0 + offset])
        clustering = significant_places(samples, params)
        assert clustering.n_clusters == 2
        out = location_features(samples, None, clustering, None, None, params)
        assert out["radius_of_gyration_m:local"] == pytest.approx(d / 2, rel=1e-3)
    report(5, "4-cluster entropy = ln 4 +/- 1e-9 (normalized 1.0); two-cluster gyration = d/2 +/- 0.1% for 100m/1km/10km")


def test_criterion_06_circadian_discrimination():
    t0 = time.perf_counter()
    wins = 0
    for p in range(20):
        rng = np.random.default_rng(500 + p)
        ts = np.sort(rng.uniform(0, 14 * DAY_MS, size=500)).astype(int)
        phase = rng.uniform(0, 2 * math.pi)
        lat = 40.0 + 0.012 * np.sin(2 * math.pi * ts / DAY_MS + phase) + rng.normal(0, 0.001, size=ts.size)
        periodic = [LocationFix(int(t), GeoPoint(float(l), 0.0)) for t, l in zip(ts, lat)]
        shuffled = [
            LocationFix(int(t), GeoPoint(float(l), 0.0)) for t, l in zip(ts, rng.permutation(lat))
        ]
        if circadian_movement(periodic) > circadian_movement(shuffled):
            wins += 1
    elapsed = time.perf_counter() - t0
    assert wins >= 19, f"only {wins}/20 periodic traces beat their shuffles"
    assert elapsed < 10.0, f"circadian criterion took {elapsed:.2f}s"
    report(6, f"CM(periodic) > CM(shuffled) for {wins}/20 synthetic participants in {elapsed:.2f}s")


def test_criterion_07_breakpoint_recovery():
    rng = np.random.default_rng(20230108)
    n = 12
    within_one = 0
    signs_ok = 0
    recovered = 0
    for _ in range(100):
        b0 = int(rng.integers(3, 10))
        s1 = float(rng.uniform(0.5, 1.5)) * (1 if rng.uniform() < 0.5 else -1)
        s2 = -math.copysign(float(rng.uniform(0.5, 1.5)), s1)
        sigma = 0.1 * abs(s2 - s1)  # noise sigma = 10% of the slope step
        vals = []
        for w in range(1, n + 1):
            base = s1 * w if w <= b0 else s1 * b0 + s2 * (w - b0)
            vals.append(base + float(rng.normal(0, sigma)))
        cf = change_features(WeeklySeries("f", tuple(vals), midpoint=6))
        assert cf.breakpoint is not None
        if abs(cf.breakpoint - b0) <= 1:
            within_one += 1
            recovered += 1
            if math.copysign(1, cf.slope_before) == math.copysign(1, s1) and math.copysign(
                1, cf.slope_after
            ) == math.copysign(1, s2):
                signs_ok += 1
    assert within_one >= 90, f"breakpoint within +/-1 week in only {within_one}/100"
    assert signs_ok == recovered, f"slope signs wrong in {recovered - signs_ok} recovered cases"
    report(7, f"breakpoint within +/-1 week in {within_one}/100 series; slope signs correct in all {recovered} recovered")


def test_criterion_08_windowing_partition_with_dst():
    from dataclasses import dataclass

    @dataclass(frozen=True)
    class Rec:
        timestamp: int

    config = build_config(start=date(2023, 3, 1), end=date(2023, 3, 30), timezone="America/New_York")
    daily = build_slices(config, granularities=["daily"])
    all_day = {s.index: s for s in daily if s.epoch == "all_day"}
    start_ms = all_day[1].bounds[0][0]
    end_ms = all_day[30].bounds[-1][1]
    records = [Rec(t) for t in range(start_ms, end_ms, MIN_MS)]
    spans = {s.span_ms for s in all_day.values()}
    assert 23 * 3_600_000 in spans  # the March 12 spring-forward day

    total_assigned = 0
    for index in range(1, 31):
        day_all = assign(records, all_day[index])
        epoch_records = []
        for s in daily:
            if s.index == index and s.epoch != "all_day":
                epoch_records.extend(assign(records, s))
        got = sorted(r.timestamp for r in epoch_records)
        want = [r.timestamp for r in day_all]
        assert got == want, f"day {index}: epochs lost or duplicated records"
        total_assigned += len(got)
    assert total_assigned == len(records)
    report(8, "four epochs partition 30 days of minute records (DST transition included) with no loss or duplication")


def test_criterion_09_end_to_end_determinism(tmp_path):
    build = time.perf_counter()
    config_path = build_dataset(tmp_path)
    input_dir = tmp_path / "input"

    def run(name, jobs):
        out = tmp_path / name
        t0 = time.perf_counter()
        code = main(
            ["--config", str(config_path), "--input", str(input_dir), "--output", str(out), "--jobs", str(jobs)]
        )
        elapsed = time.perf_counter() - t0
        assert code == 0
        assert elapsed < 30.0, f"run {name} took {elapsed:.1f}s"
        return out.read_bytes(), elapsed, out

    matrix1, t1, out1 = run("m1.csv", 1)
    matrix2, t2, _ = run("m2.csv", 1)
    matrix3, t3, _ = run("m3.csv", 1)
    matrix8, t8, out8 = run("m8.csv", 8)
    assert matrix1 == matrix2 == matrix3, "repeat runs are not byte-identical"
    assert matrix1 == matrix8, "--jobs 1 and --jobs 8 differ"

    # manifests agree too, ignoring the wall-clock field
    m1 = json.loads(Path(str(out1) + ".manifest.json").read_text())
    m8 = json.loads(Path(str(out8) + ".manifest.json").read_text())
    m1.pop("completed_at")
    m8.pop("completed_at")
    assert m1 == m8
    report(9, f"byte-identical matrix across 3 runs and jobs 1 vs 8 (runs: {t1:.1f}/{t2:.1f}/{t3:.1f}/{t8:.1f}s)")


def test_criterion_10_fusion_rules():
    gap = 300.0

    def academic_fixes(minutes):
        return fixes_at(IN_ACADEMIC, 0, minutes + 1, step_ms=MIN_MS)

    def study(minutes, steps=(), interactions=()):
        bouts, _ = place_bouts(academic_fixes(minutes), PlaceLabeler(MAP), gap)
        return study_duration_min(bouts, list(steps), list(interactions))

    assert study(29) == 0.0
    assert study(30) == 30.0
    assert study(35, steps=[StepBin(start=600_000, steps=9)]) == 35.0
    assert study(35, steps=[StepBin(start=600_000, steps=10)]) == 0.0  # "fewer than 10" is strict
    assert study(35, interactions=[InteractionBout(start=600_000, end=660_000, kind="interaction")]) == 0.0

    def social(minutes, n_voice, n_other):
        fixes = fixes_at(IN_GREEN, 0, minutes + 1, step_ms=MIN_MS)
        bouts, _ = place_bouts(fixes, PlaceLabeler(MAP), gap)
        span = minutes * MIN_MS
        talk = [
            ConversationInference(timestamp=int(i * span / (n_voice + n_other)), label="voice")
            for i in range(n_voice)
        ]
        talk += [
            ConversationInference(timestamp=int((n_voice + i) * span / (n_voice + n_other)), label="silence")
            for i in range(n_other)
        ]
        return social_duration_min(bouts, sorted(talk, key=lambda c: c.timestamp))

    assert social(19, 100, 0) == 0.0
    assert social(20, 100, 0) == 20.0
    assert social(25, 79, 21) == 0.0
    assert social(25, 80, 20) == 25.0
    report(10, "study/social duration honor the 30-min, 20-min, and 80% thresholds exactly at their edges")
