from sensefeat.features.calls import call_features
from sensefeat.records import CallRecord

CONTACTS = {"mom": "family", "dad": "family", "f1": "friend_on_campus", "f2": "friend_off_campus"}


def call(ts, who, direction, dur=0.0):
    return CallRecord(timestamp=ts, correspondent=who, direction=direction, duration_s=dur)


class TestCallFeatures:
    def test_worked_example(self):
        calls = [
            call(1000, "mom", "incoming", 60),
            call(2000, "mom", "incoming", 120),
            call(3000, "stranger", "missed", 0),
        ]
        out = call_features(calls, CONTACTS)
        assert out["incoming_count:family"] == 2
        assert out["incoming_duration_s:family"] == 180
        assert out["missed_count:everyone"] == 1
        assert out["correspondents:everyone"] == 2
        assert out["correspondents:family"] == 1

    def test_empty_slice_is_all_zero(self):
        out = call_features([], CONTACTS)
        assert all(v == 0.0 for v in out.values())
        assert out["incoming_count:everyone"] == 0
        assert out["correspondents:family"] == 0

    def test_missed_calls_have_zero_duration(self):
        out = call_features([call(1, "mom", "missed", 0.0)], CONTACTS)
        duration_keys = [k for k in out if "duration" in k]
        assert all(out[k] == 0.0 for k in duration_keys)

    def test_unknown_correspondent_in_everyone_only(self):
        out = call_features([call(1, "ghost", "outgoing", 30)], CONTACTS)
        assert out["outgoing_count:everyone"] == 1
        assert out["outgoing_duration_s:everyone"] == 30
        assert out["outgoing_count:family"] == 0
        assert out["correspondents:everyone"] == 1
        assert out["correspondents:family"] == 0

    def test_direction_sums_to_total(self):
        calls = [
            call(1, "mom", "incoming", 10),
            call(2, "f1", "outgoing", 20),
            call(3, "f2", "missed"),
            call(4, "ghost", "incoming", 5),
        ]
        out = call_features(calls, CONTACTS)
        total = sum(out[f"{d}_count:everyone"] for d in ("incoming", "outgoing", "missed"))
        assert total == len(calls)

    def test_category_never_exceeds_everyone(self):
        calls = [
            call(1, "mom", "incoming", 10),
            call(2, "dad", "incoming", 10),
            call(3, "f1", "incoming", 10),
        ]
        out = call_features(calls, CONTACTS)
        for d in ("incoming", "outgoing", "missed"):
            for c in ("family", "friend_off_campus", "friend_on_campus"):
                assert out[f"{d}_count:{c}"] <= out[f"{d}_count:everyone"]

    def test_correspondent_counts_match_set_oracle(self):
        calls = [
            call(1, "mom", "incoming", 1),
            call(2, "mom", "outgoing", 1),
            call(3, "dad", "missed"),
            call(4, "f1", "incoming", 2),
            call(5, "ghost", "incoming", 2),
        ]
        out = call_features(calls, CONTACTS)
        assert out["correspondents:everyone"] == len({c.correspondent for c in calls})
        fam = {c.correspondent for c in calls if CONTACTS.get(c.correspondent) == "family"}
        assert out["correspondents:family"] == len(fam)
