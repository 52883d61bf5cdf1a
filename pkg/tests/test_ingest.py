import math
from datetime import date

import numpy as np
import pytest

from pitchguard.core.errors import (
    DuplicateDayError,
    EmptyWeekSetError,
    MalformedRowError,
    MissingColumnError,
    NonPositiveResponseError,
    OutOfRangeError,
    TruncationTooDeepError,
)
from pitchguard.models.configs import FilterConfig
from pitchguard.models.exposure import Censored, Injured, InjuryEvent, SeverityCategory
from pitchguard.models.gps import GpsSession
from pitchguard.services.ingest import (
    aggregate_weekly,
    bin_severity,
    describe_cohort,
    exp_back,
    fill_missing_days,
    filter_subjects,
    load_exposure_csv,
    load_gps_csv,
    load_injuries_csv,
    load_roster_csv,
    log_transform,
    speed_zone,
    speed_zones,
    training_targets,
    truncate_record,
)
from pitchguard.services.synth import synth_generate, write_dataset

HEADER = "subject_id,day_index,training_minutes,match_minutes\n"


def _write(tmp_path, text, name="exposure.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_exposure_single_subject(tmp_path):
    path = _write(tmp_path, HEADER + "P1,1,60,0\nP1,2,0,90\nP1,3,45,0\n")
    records = load_exposure_csv(path)
    assert len(records) == 1
    assert [d.day_index for d in records[0].days] == [1, 2, 3]
    assert records[0].match.tolist() == [0.0, 90.0, 0.0]
    assert records[0].outcome == Censored(last_observed_day=3)


def test_load_exposure_interleaved_subjects_sorted(tmp_path):
    path = _write(tmp_path, HEADER + "A,3,10,0\nB,1,5,0\nA,1,20,0\nB,2,6,0\nA,2,30,0\n")
    records = load_exposure_csv(path)
    assert [r.subject_id for r in records] == ["A", "B"]
    assert records[0].training.tolist() == [20.0, 30.0, 10.0]
    assert [d.day_index for d in records[1].days] == [1, 2]


def test_load_exposure_malformed_minutes(tmp_path):
    path = _write(tmp_path, HEADER + "P1,1,60,0\nP1,2,abc,0\n")
    with pytest.raises(MalformedRowError) as excinfo:
        load_exposure_csv(path)
    assert excinfo.value.line == 3


def test_load_exposure_duplicate_day(tmp_path):
    path = _write(tmp_path, HEADER + "P1,1,60,0\nP1,1,30,0\n")
    with pytest.raises(DuplicateDayError) as excinfo:
        load_exposure_csv(path)
    assert excinfo.value.subject == "P1"
    assert excinfo.value.day == 1


def test_load_exposure_missing_column(tmp_path):
    path = _write(tmp_path, "subject_id,day_index,training_minutes\nP1,1,60\n")
    with pytest.raises(MissingColumnError) as excinfo:
        load_exposure_csv(path)
    assert excinfo.value.name == "match_minutes"


def test_load_exposure_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_exposure_csv(tmp_path / "absent.csv")


def test_load_injuries_rejects_bad_flag(tmp_path):
    path = _write(tmp_path, "subject_id,day,intrinsic,days_unavailable\nP1,10,2,5\n", "injuries.csv")
    with pytest.raises(MalformedRowError):
        load_injuries_csv(path)


def test_fill_missing_days_inserts_zero_day(record_factory):
    record = record_factory("P1", [10, 30], [5, 0], days=[1, 3])
    filled = fill_missing_days(record)
    assert [d.day_index for d in filled.days] == [1, 2, 3]
    assert filled.days[1].training_minutes == 0 and filled.days[1].match_minutes == 0
    assert filled.days[0] == record.days[0] and filled.days[2] == record.days[1]


def test_fill_missing_days_identity_and_idempotent(record_factory):
    record = record_factory("P1", [1, 2, 3])
    assert fill_missing_days(record) == record
    gappy = record_factory("P2", [7, 8], days=[2, 5])
    once = fill_missing_days(gappy)
    assert len(once.days) == 5
    assert [d.day_index for d in once.days if d.training_minutes == 0] == [1, 3, 4]
    assert fill_missing_days(once) == once


@pytest.mark.parametrize("a, kept", [(0, 5), (2, 3)])
def test_truncate_record(record_factory, a, kept):
    record = record_factory("P1", [1, 2, 3, 4, 5], injury_day=5)
    truncated = truncate_record(record, a)
    assert [d.day_index for d in truncated.days] == list(range(1, kept + 1))
    assert truncated.outcome == Injured(day_of_injury=5)


def test_truncate_record_too_deep(record_factory):
    record = record_factory("P1", list(range(14)), injury_day=14)
    with pytest.raises(TruncationTooDeepError):
        truncate_record(record, 13)


def test_truncate_zero_equals_filled_record(record_factory):
    record = record_factory("P1", [3, 4, 5], days=[1, 3, 6], injury_day=6)
    assert truncate_record(record, 0) == fill_missing_days(record)


def _event(subject, day, intrinsic=True, lost=10):
    return InjuryEvent(subject_id=subject, day=day, intrinsic=intrinsic, days_unavailable=lost)


def test_filter_subjects_rules(record_factory):
    records = [
        record_factory("early", [60] * 50),
        record_factory("transient", [60] * 50),
        record_factory("healthy", [60] * 50),
        record_factory("contact", [60] * 50),
        record_factory("keeper", [60] * 50),
    ]
    events = [
        _event("early", 2),
        _event("transient", 10, lost=0),
        _event("transient", 40),
        _event("contact", 20, intrinsic=False),
        _event("keeper", 30),
    ]
    result = filter_subjects(records, events, FilterConfig(), positions={"keeper": "Goalkeeper"})
    outcomes = {r.subject_id: r.outcome for r in result}
    assert set(outcomes) == {"transient", "healthy"}
    assert outcomes["transient"] == Injured(day_of_injury=40)
    assert outcomes["healthy"] == Censored(last_observed_day=50)


def test_filter_subjects_pads_late_injury(record_factory):
    record = record_factory("P1", [60] * 10)
    (result,) = filter_subjects([record], [_event("P1", 14)], FilterConfig())
    assert result.outcome == Injured(day_of_injury=14)
    assert result.days[-1].day_index == 14
    assert result.training[10:].tolist() == [0.0] * 4


def test_log_transform_and_back():
    assert log_transform(1) == 0
    assert log_transform(math.e) == pytest.approx(1.0)
    assert log_transform(14) == pytest.approx(2.6391, abs=1e-4)
    values = np.array([3.0, 17.0, 120.0])
    np.testing.assert_allclose(exp_back(log_transform(values)), values, rtol=1e-12)
    with pytest.raises(NonPositiveResponseError):
        log_transform(0)


def test_training_targets_censored_opt_in(record_factory):
    records = [record_factory("a", [1] * 20, injury_day=20), record_factory("b", [1] * 30)]
    used, targets = training_targets(records)
    assert [r.subject_id for r in used] == ["a"]
    used, targets = training_targets(records, include_censored=True)
    np.testing.assert_allclose(targets, np.log([20, 30]))


@pytest.mark.parametrize(
    "days, category",
    [
        (0, SeverityCategory.TRANSIENT),
        (7, SeverityCategory.TRANSIENT),
        (8, SeverityCategory.MILD),
        (28, SeverityCategory.MILD),
        (29, SeverityCategory.MODERATE),
        (83, SeverityCategory.MODERATE),
        (84, SeverityCategory.SEVERE),
    ],
)
def test_bin_severity(days, category):
    assert bin_severity(days) is category


def test_bin_severity_negative():
    with pytest.raises(OutOfRangeError):
        bin_severity(-1)


@pytest.mark.parametrize("fraction, zone", [(0.0, 1), (0.30, 1), (0.35, 2), (0.50, 3), (0.64, 4), (0.75, 6), (1.0, 6)])
def test_speed_zone(fraction, zone):
    assert speed_zone(fraction) == zone


def test_speed_zone_out_of_range():
    with pytest.raises(OutOfRangeError):
        speed_zone(1.2)
    with pytest.raises(OutOfRangeError):
        speed_zones([0.1, -0.1])


def _session(subject, day, value):
    return GpsSession(subject_id=subject, date=day, duration_minutes=60.0, features={"f": value})


def _weekly_sessions():
    return [
        _session("P1", date(2014, 7, 7), 4.0),
        _session("P1", date(2014, 7, 8), 6.0),
        _session("P1", date(2014, 7, 16), 1.0),
        _session("P2", date(2014, 7, 7), 2.0),
    ]


def test_aggregate_weekly_mean_and_labels():
    events = [_event("P1", 10)]
    frame = aggregate_weekly(_weekly_sessions(), events, "A", season_start=date(2014, 7, 7))
    table = frame.table
    assert table["subject_id"].tolist() == ["P1", "P1"]
    assert table["iso_week_index"].tolist() == [201428, 201429]
    assert table["f"].tolist() == [5.0, 1.0]
    assert table["injured"].tolist() == [False, True]
    assert frame.feature_names == ("duration_minutes", "f")


def test_aggregate_weekly_approach_b_keeps_healthy():
    frame = aggregate_weekly(_weekly_sessions(), [_event("P1", 10)], "B", season_start=date(2014, 7, 7))
    healthy = frame.table[frame.table["subject_id"] == "P2"]
    assert len(healthy) == 1
    assert not healthy["injured"].iloc[0]
    assert len(frame) == 3


def test_aggregate_weekly_empty_after_filter():
    with pytest.raises(EmptyWeekSetError):
        aggregate_weekly(_weekly_sessions(), [], "A")


def test_synthetic_dataset_round_trip(tmp_path, small_synth):
    cohort = synth_generate(small_synth, seed=3)
    paths = write_dataset(cohort, tmp_path)
    assert load_exposure_csv(paths["exposure"]) == cohort.records
    assert load_injuries_csv(paths["injuries"]) == cohort.events
    assert load_gps_csv(paths["gps"]) == cohort.sessions
    assert load_roster_csv(paths["roster"]) == cohort.positions


def test_describe_cohort(record_factory):
    records = [
        record_factory("a", [1] * 20, injury_day=20),
        record_factory("b", [1] * 40, injury_day=40),
        record_factory("c", [1] * 30),
    ]
    events = [_event("a", 20, lost=3), _event("b", 40, lost=90)]
    summary = describe_cohort(records, events)
    assert summary["subjects"] == 3
    assert summary["injured"] == 2 and summary["censored"] == 1
    assert summary["response_median"] == 30.0
    assert summary["severity"]["Transient"] == 1
    assert summary["severity"]["Severe"] == 1
