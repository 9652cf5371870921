import datetime as dt

import pytest

from oracles import classify_oracle
from wifisense.errors import EmptyTrajectory
from wifisense.model import AuthHint, Role, Session, Trajectory
from wifisense.profiler import AuthSummary, ProfilePolicy, classify, max_daily_dorm_dwell

SEMESTER = (dt.date(2020, 1, 6), dt.date(2020, 5, 1))


def _dorm_ap(campus):
    return next(i.ap for i in campus.aps.values() if i.area_kind.value == "Dorm")


def _academic_ap(campus):
    return next(i.ap for i in campus.aps.values() if i.area_kind.value == "Academic")


def _traj(campus, ap, day0, spans):
    dev = "a1" * 32
    sessions = [Session(dev, ap, day0 + s, day0 + e) for s, e in spans]
    return Trajectory(dev, sessions)


def test_six_hour_dorm_stay_is_resident(campus, day0):
    traj = _traj(campus, _dorm_ap(campus), day0, [(9 * 3600, 15 * 3600)])
    p = classify(traj, AuthSummary(True, 30, AuthHint.STUDENT_LOGIN), campus, SEMESTER)
    assert p.role == Role.DORM_RESIDENT
    assert p.max_daily_dorm_dwell == 6 * 3600


def test_exact_five_hours_is_student_one_second_more_is_resident(campus, day0):
    ap = _dorm_ap(campus)
    auth = AuthSummary(True, 30, AuthHint.STUDENT_LOGIN)
    at_boundary = _traj(campus, ap, day0, [(9 * 3600, 14 * 3600)])
    assert classify(at_boundary, auth, campus, SEMESTER).role == Role.STUDENT
    over = _traj(campus, ap, day0, [(9 * 3600, 14 * 3600 + 1)])
    assert classify(over, auth, campus, SEMESTER).role == Role.DORM_RESIDENT


def test_dorm_dwell_sums_across_a_day(campus, day0):
    ap = _dorm_ap(campus)
    auth = AuthSummary(True, 30, AuthHint.STUDENT_LOGIN)
    split = _traj(campus, ap, day0, [(8 * 3600, 11 * 3600), (13 * 3600, 15 * 3600 + 1)])
    p = classify(split, auth, campus, SEMESTER)
    assert p.role == Role.DORM_RESIDENT  # 3h + 2h1s on one day
    two_days = _traj(campus, ap, day0, [(8 * 3600, 11 * 3600), (30 * 3600, 33 * 3600)])
    assert classify(two_days, auth, campus, SEMESTER).role == Role.STUDENT


def test_dwell_splits_at_local_midnight(campus, day0):
    ap = _dorm_ap(campus)
    traj = _traj(campus, ap, day0, [(20 * 3600, 28 * 3600)])  # 20:00 -> 04:00 next day
    assert max_daily_dorm_dwell(traj, campus) == 4 * 3600


def test_one_time_login_is_visitor(campus, day0):
    traj = _traj(campus, _academic_ap(campus), day0, [(9 * 3600, 16 * 3600)])
    p = classify(traj, AuthSummary(True, 1, AuthHint.STUDENT_LOGIN), campus, SEMESTER)
    assert p.role == Role.VISITOR


def test_visitor_rule_beats_staff_hint(campus, day0):
    traj = _traj(campus, _academic_ap(campus), day0, [(9 * 3600, 16 * 3600)])
    p = classify(traj, AuthSummary(True, 3, AuthHint.STAFF_LOGIN), campus, SEMESTER)
    assert p.role == Role.VISITOR
    p4 = classify(traj, AuthSummary(True, 4, AuthHint.STAFF_LOGIN), campus, SEMESTER)
    assert p4.role == Role.STAFF


def test_no_auth_is_anonymous_even_with_dorm_dwell(campus, day0):
    traj = _traj(campus, _dorm_ap(campus), day0, [(0, 20 * 3600)])
    p = classify(traj, AuthSummary(False, 0, AuthHint.NONE), campus, SEMESTER)
    assert p.role == Role.ANONYMOUS
    assert not p.has_auth


def test_staff_never_becomes_resident(campus, day0):
    traj = _traj(campus, _dorm_ap(campus), day0, [(0, 20 * 3600)])
    p = classify(traj, AuthSummary(True, 40, AuthHint.STAFF_LOGIN), campus, SEMESTER)
    assert p.role == Role.STAFF


def test_empty_trajectory_rejected(campus):
    with pytest.raises(EmptyTrajectory):
        classify(Trajectory("a" * 64, []), AuthSummary(True, 9, AuthHint.STUDENT_LOGIN), campus, SEMESTER)


def test_classifier_agrees_with_oracle_on_random_population(campus, day0, rng):
    dorm, acad = _dorm_ap(campus), _academic_ap(campus)
    policy = ProfilePolicy()
    hints = [AuthHint.NONE, AuthHint.STAFF_LOGIN, AuthHint.STUDENT_LOGIN]
    hint_names = {AuthHint.NONE: "none", AuthHint.STAFF_LOGIN: "staff", AuthHint.STUDENT_LOGIN: "student"}
    for _ in range(300):
        has_auth = bool(rng.random() < 0.8)
        login_days = int(rng.integers(0, 12)) if has_auth else 0
        hint = hints[rng.integers(0, 3)] if has_auth else AuthHint.NONE
        dorm_secs = int(rng.integers(0, 8 * 3600))
        if rng.random() < 0.1:
            dorm_secs = 5 * 3600 + int(rng.integers(-1, 2))  # hammer the boundary
        spans = []
        if dorm_secs:
            spans.append((dorm, 8 * 3600, 8 * 3600 + dorm_secs))
        spans.append((acad, 17 * 3600, 18 * 3600))
        dev = "b2" * 32
        traj = Trajectory(dev, [Session(dev, ap, day0 + s, day0 + e) for ap, s, e in spans])
        got = classify(traj, AuthSummary(has_auth, login_days, hint), campus, SEMESTER, policy)
        want = classify_oracle(
            has_auth, login_days, hint_names[hint], dorm_secs, policy.visitor_max_days
        )
        assert got.role.value == want
        assert got.max_daily_dorm_dwell == dorm_secs
