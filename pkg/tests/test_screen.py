from datetime import date

import numpy as np
import pytest

from sensefeat.config import build_config
from sensefeat.features.screen import extract_bouts, usage_features
from sensefeat.records import ScreenEvent
from sensefeat.windowing import build_slices

CONFIG = build_config(start=date(2023, 1, 2), end=date(2023, 1, 2), timezone="UTC")
MIN_MS = 60_000
DAY0 = 1672617600000  # 2023-01-02 00:00 UTC


def ev(ts, status):
    return ScreenEvent(timestamp=ts, status=status)


def daily_slices():
    return {s.epoch: s for s in build_slices(CONFIG, granularities=["daily"])}


class TestExtractBouts:
    def test_unlock_off(self):
        bouts = extract_bouts([ev(1000, "unlock"), ev(121_000, "off")])
        interaction = [b for b in bouts if b.kind == "interaction"]
        assert len(interaction) == 1
        assert interaction[0].end - interaction[0].start == 120_000

    def test_on_without_unlock(self):
        bouts = extract_bouts([ev(1000, "on"), ev(11_000, "off")])
        assert [b for b in bouts if b.kind == "interaction"] == []

    def test_two_bouts(self):
        events = [ev(0, "unlock"), ev(60_000, "lock"), ev(120_000, "unlock"), ev(180_000, "off")]
        interaction = [b for b in extract_bouts(events) if b.kind == "interaction"]
        assert len(interaction) == 2

    def test_unlocked_spans_to_lock(self):
        events = [ev(0, "unlock"), ev(60_000, "off"), ev(200_000, "lock")]
        bouts = extract_bouts(events)
        interaction = [b for b in bouts if b.kind == "interaction"]
        unlocked = [b for b in bouts if b.kind == "unlocked"]
        assert interaction[0].end == 60_000
        assert unlocked[0].end == 200_000

    def test_trailing_bout_truncated(self):
        events = [ev(0, "unlock"), ev(500_000, "on")]
        bouts = extract_bouts(events)
        assert all(b.truncated for b in bouts)
        assert all(b.end == 500_000 for b in bouts)

    def test_insensitive_to_interleaved_on_events(self):
        rng = np.random.default_rng(3)
        base = [ev(0, "unlock"), ev(120_000, "lock"), ev(240_000, "unlock"), ev(400_000, "off")]
        expected = extract_bouts(base)
        for _ in range(25):
            ts = sorted(int(t) for t in rng.integers(1, 399_999, size=5))
            noisy = sorted(base + [ev(t, "on") for t in ts], key=lambda e: e.timestamp)
            assert extract_bouts(noisy) == expected

    def test_interaction_count_bounded_by_unlocks(self):
        rng = np.random.default_rng(11)
        statuses = ["on", "off", "lock", "unlock"]
        for _ in range(50):
            events = [
                ev(int(t), statuses[int(rng.integers(4))])
                for t in sorted(rng.integers(0, 10**6, size=30))
            ]
            bouts = extract_bouts(events)
            n_unlocks = sum(1 for e in events if e.status == "unlock")
            assert sum(1 for b in bouts if b.kind == "interaction") <= n_unlocks


class TestUsageFeatures:
    def test_unlocks_per_minute(self):
        sl = daily_slices()["morning"]  # 360 minutes
        t0 = sl.bounds[0][0]
        events = []
        for i in range(6):
            events.append(ev(t0 + i * 3_600_000, "unlock"))
            events.append(ev(t0 + i * 3_600_000 + 30_000, "lock"))
        bouts = extract_bouts(events)
        out = usage_features(events, bouts, sl, CONFIG)
        assert out["unlocks_per_min"] == pytest.approx(6 / 360.0, abs=1e-5)
        assert out["unlocks_per_min"] == pytest.approx(0.016667, abs=1e-5)

    def test_first_unlock_hour(self):
        sl = daily_slices()["all_day"]
        t = DAY0 + int(7.5 * 3_600_000)  # 07:30 local (UTC config)
        events = [ev(t, "unlock"), ev(t + 60_000, "lock")]
        out = usage_features(events, extract_bouts(events), sl, CONFIG)
        assert out["first_unlock_hour"] == pytest.approx(7.5)
        assert out["last_lock_hour"] == pytest.approx(7.5 + 1 / 60)

    def test_single_bout_stats(self):
        sl = daily_slices()["all_day"]
        events = [ev(DAY0 + 1000, "unlock"), ev(DAY0 + 301_000, "off")]
        out = usage_features(events, extract_bouts(events), sl, CONFIG)
        assert out["interaction_bout_max_s"] == out["interaction_bout_min_s"] == 300.0
        assert out["interaction_bout_mean_s"] == 300.0
        assert out["interaction_bout_std_s"] == 0.0

    def test_bout_clipped_to_slice(self):
        slices = daily_slices()
        morning = slices["morning"]
        # unlock 30 min before noon, off 30 min after: afternoon slice sees 30 min
        t_unlock = DAY0 + int(11.5 * 3_600_000)
        events = [ev(t_unlock, "unlock"), ev(t_unlock + 3_600_000, "off")]
        bouts = extract_bouts(events)
        out_morning = usage_features([events[0]], bouts, morning, CONFIG)
        assert out_morning["interaction_time_s"] == pytest.approx(1800.0)
        afternoon = slices["afternoon"]
        out_afternoon = usage_features([], bouts, afternoon, CONFIG)
        assert out_afternoon["interaction_time_s"] == pytest.approx(1800.0)
        assert "unlocks_per_min" in out_afternoon
        assert out_afternoon["unlocks_per_min"] == 0.0

    def test_interaction_within_unlocked_within_span(self):
        sl = daily_slices()["all_day"]
        events = [
            ev(DAY0, "unlock"),
            ev(DAY0 + 600_000, "off"),
            ev(DAY0 + 1_200_000, "unlock"),
            ev(DAY0 + 1_500_000, "lock"),
        ]
        out = usage_features(events, extract_bouts(events), sl, CONFIG)
        assert out["interaction_time_s"] <= out["unlocked_time_s"] <= sl.span_ms / 1000.0

    def test_empty_slice_missing(self):
        sl = daily_slices()["night"]
        assert usage_features([], [], sl, CONFIG) == {}
