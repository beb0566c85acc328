import pytest

from sensefeat.errors import IngestError
from sensefeat.ingest import load_contacts, load_participant, load_stream, validate_dataset
from sensefeat.records import SleepMinute


def write(path, text):
    path.write_text(text, encoding="utf-8")


class TestLoadStream:
    def test_empty_file_with_header(self, tmp_path):
        p = tmp_path / "bluetooth.csv"
        write(p, "timestamp,address\n")
        res = load_stream(p, "bluetooth")
        assert res.records == []
        assert res.rejected == 0

    def test_duplicates_dropped(self, tmp_path):
        p = tmp_path / "bluetooth.csv"
        write(p, "timestamp,address\n1000,aa\n1000,aa\n1000,bb\n")
        res = load_stream(p, "bluetooth")
        assert len(res.records) == 2
        assert res.rejected == 0

    def test_sorted_ascending(self, tmp_path):
        p = tmp_path / "screen.csv"
        rows = [(5000, "on"), (1000, "unlock"), (3000, "lock")]
        write(p, "timestamp,status\n" + "".join(f"{t},{s}\n" for t, s in rows))
        res = load_stream(p, "screen")
        got = [r.timestamp for r in res.records]
        assert got == sorted(t for t, _ in rows)

    def test_malformed_rows_skipped_and_counted(self, tmp_path):
        p = tmp_path / "location.csv"
        write(p, "timestamp,lat,lon\n1000,40.0,-80.0\nnot_a_ts,1,2\n2000,95.0,-80.0\n3000,41.0\n")
        res = load_stream(p, "location")
        assert len(res.records) == 1
        assert res.rejected == 3
        assert any(":3:" in msg for msg in res.issues)  # out-of-range latitude, line 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_stream(tmp_path / "calls.csv", "calls")

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "calls.csv"
        write(p, "time,who,direction,duration\n")
        with pytest.raises(IngestError):
            load_stream(p, "calls")

    def test_missed_call_duration_coerced_to_zero(self, tmp_path):
        p = tmp_path / "calls.csv"
        write(p, "timestamp,correspondent,direction,duration_s\n1000,c1,missed,33\n2000,c2,incoming,60\n")
        res = load_stream(p, "calls")
        assert res.records[0].duration_s == 0.0
        assert res.records[1].duration_s == 60.0

    def test_sleep_minute_alignment(self, tmp_path):
        p = tmp_path / "sleep.csv"
        write(p, "timestamp,state\n90500,asleep\n")
        res = load_stream(p, "sleep")
        assert res.records == [SleepMinute(timestamp=60000, state="asleep")]

    def test_step_bins_aligned_and_non_overlapping(self, tmp_path):
        p = tmp_path / "steps.csv"
        write(p, "start_timestamp,steps\n300500,12\n300100,8\n600000,4\n")
        res = load_stream(p, "steps")
        # both early rows floor to 300000; the later duplicate start is dropped
        assert [b.start for b in res.records] == [300000, 600000]
        assert res.rejected == 1

    def test_idempotent(self, tmp_path):
        p = tmp_path / "bluetooth.csv"
        write(p, "timestamp,address\n3,aa\n1,bb\n2,aa\n")
        assert load_stream(p, "bluetooth").records == load_stream(p, "bluetooth").records


class TestContacts:
    def test_mapping(self, tmp_path):
        p = tmp_path / "contacts.csv"
        write(p, "correspondent,category\nc1,family\nc2,friend_on_campus\nc3,badcat\n")
        mapping, rejected, _ = load_contacts(p)
        assert mapping == {"c1": "family", "c2": "friend_on_campus"}
        assert rejected == 1


class TestParticipantAndValidation:
    def test_absent_sensors_reported(self, tmp_path):
        d = tmp_path / "p01"
        d.mkdir()
        write(d / "sleep.csv", "timestamp,state\n60000,asleep\n")
        data = load_participant(d)
        report = validate_dataset(data)
        assert report.sensors["sleep"].present
        assert not report.sensors["bluetooth"].present
        assert not report.sensors["location"].present

    def test_full_day_minute_data_coverage(self, tmp_path):
        d = tmp_path / "p02"
        d.mkdir()
        rows = "".join(f"{i * 60000},asleep\n" for i in range(1440))
        write(d / "sleep.csv", "timestamp,state\n" + rows)
        report = validate_dataset(load_participant(d))
        assert report.sensors["sleep"].coverage_pct == pytest.approx(100.0)

    def test_planted_gap_lands_in_bucket(self, tmp_path):
        d = tmp_path / "p03"
        d.mkdir()
        first = "".join(f"{i * 60000},asleep\n" for i in range(60))
        resume = 59 * 60000 + 2 * 3600 * 1000
        second = "".join(f"{resume + i * 60000},awake\n" for i in range(60))
        write(d / "sleep.csv", "timestamp,state\n" + first + second)
        report = validate_dataset(load_participant(d))
        assert report.sensors["sleep"].gap_histogram["ge_2h"] == 1
