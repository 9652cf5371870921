import datetime as dt

import pytest

from wifisense.errors import OrderError, OverlapError, SchemaError
from wifisense.model import (
    EventSubtype,
    Phase,
    PhaseConfig,
    SUBTYPE_TOKENS,
    Session,
    Trajectory,
    load_phases,
)


def test_exactly_six_subtypes():
    assert len(EventSubtype) == 6
    assert set(SUBTYPE_TOKENS) == {
        "association",
        "disassociation",
        "reassociation",
        "authentication",
        "deauthentication",
        "drift",
    }


def test_subtype_precedence_closes_before_opens():
    assert EventSubtype.DISASSOCIATION < EventSubtype.ASSOCIATION
    assert EventSubtype.DEAUTHENTICATION < EventSubtype.REASSOCIATION
    assert EventSubtype.DRIFT < EventSubtype.AUTHENTICATION


def test_session_rejects_empty_interval():
    with pytest.raises(ValueError):
        Session("d" * 64, "ap1", 100, 100)
    s = Session("d" * 64, "ap1", 100, 160)
    assert s.duration == 60


def test_trajectory_validates_order_and_device():
    dev = "a" * 64
    t = Trajectory(dev, [Session(dev, "x", 0, 10), Session(dev, "y", 10, 20)])
    t.validate()
    bad = Trajectory(dev, [Session(dev, "x", 0, 10), Session(dev, "y", 5, 20)])
    with pytest.raises(ValueError):
        bad.validate()


def test_phase_boundary_forms_valid_config():
    cfg = PhaseConfig(
        [
            Phase("P0", dt.date(2020, 1, 1), dt.date(2020, 2, 18)),
            Phase("P1", dt.date(2020, 2, 19), dt.date(2020, 3, 21)),
        ]
    )
    assert cfg.names() == ["P0", "P1"]


def test_single_day_phase_ok():
    cfg = PhaseConfig([Phase("only", dt.date(2020, 5, 5), dt.date(2020, 5, 5))])
    assert cfg["only"].n_days == 1


def test_overlapping_phases_rejected():
    with pytest.raises(OverlapError):
        PhaseConfig(
            [
                Phase("P0", dt.date(2020, 1, 1), dt.date(2020, 2, 20)),
                Phase("P1", dt.date(2020, 2, 19), dt.date(2020, 3, 21)),
            ]
        )


def test_inverted_and_unsorted_phases_rejected():
    with pytest.raises(OrderError):
        PhaseConfig([Phase("P0", dt.date(2020, 2, 2), dt.date(2020, 2, 1))])
    with pytest.raises(OrderError):
        PhaseConfig(
            [
                Phase("P1", dt.date(2020, 3, 1), dt.date(2020, 3, 2)),
                Phase("P0", dt.date(2020, 1, 1), dt.date(2020, 1, 2)),
            ]
        )


def test_phase_lookup_is_total_and_unique():
    cfg = PhaseConfig(
        [
            Phase("P0", dt.date(2020, 1, 1), dt.date(2020, 1, 10)),
            Phase("P1", dt.date(2020, 1, 20), dt.date(2020, 1, 25)),
        ]
    )
    for day in range(cfg["P0"].day_range[0] - 5, cfg["P1"].day_range[1] + 5):
        hits = [p.name for p in cfg if p.day_range[0] <= day < p.day_range[1]]
        found = cfg.phase_of_day(day)
        assert len(hits) <= 1
        assert (found.name if found else None) == (hits[0] if hits else None)


def test_load_phases_roundtrip(tmp_path):
    doc = {
        "phases": [
            {"name": "P0", "start_date": "2020-02-01", "end_date": "2020-02-18", "description": "x"},
            {"name": "P1", "start_date": "2020-02-19", "end_date": "2020-03-21"},
        ]
    }
    p = tmp_path / "phases.json"
    import json

    p.write_text(json.dumps(doc))
    cfg = load_phases(p)
    assert cfg.to_doc()["phases"][0]["name"] == "P0"
    assert cfg["P1"].start_date == dt.date(2020, 2, 19)


def test_load_phases_rejects_garbage():
    with pytest.raises(SchemaError):
        load_phases({"phases": [{"name": "x", "start_date": "not-a-date", "end_date": "2020-01-01"}]})
    with pytest.raises(SchemaError):
        load_phases({"nope": []})
