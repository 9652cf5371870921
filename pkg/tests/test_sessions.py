import datetime as dt

import numpy as np
import pytest

from conftest import SALT
from oracles import sessionize_oracle
from wifisense import _kernels
from wifisense.errors import MixedDevices, UnsortedInput
from wifisense.ingest import EventColumns, IngestContext, ingest_lines
from wifisense.model import EventSubtype, NormalizedEvent, Session, Trajectory
from wifisense.sessions import (
    DedupePolicy,
    SessionPolicy,
    SessionSet,
    dedupe_devices,
    sessionize,
)

DEV = "e" * 64


def _ev(ts, sub, ap, device=DEV):
    return NormalizedEvent(ts, "c", "p", sub, device, ap)


A = EventSubtype.ASSOCIATION
R = EventSubtype.REASSOCIATION
D = EventSubtype.DISASSOCIATION
X = EventSubtype.DEAUTHENTICATION
K = EventSubtype.DRIFT
U = EventSubtype.AUTHENTICATION


def _spans(traj):
    return [(s.ap, s.start, s.end) for s in traj.sessions]


def test_open_close():
    t0 = 9 * 3600
    traj = sessionize([_ev(t0, A, "apA"), _ev(t0 + 2400, D, "apA")])
    assert _spans(traj) == [("apA", t0, t0 + 2400)]


def test_ap_switch_closes_at_switch_instant():
    t0 = 9 * 3600
    traj = sessionize([_ev(t0, A, "apA"), _ev(t0 + 1800, A, "apB"), _ev(t0 + 3600, D, "apB")])
    assert _spans(traj) == [("apA", t0, t0 + 1800), ("apB", t0 + 1800, t0 + 3600)]


def test_idle_timeout_closes_unterminated_session():
    t0 = 1000
    traj = sessionize([_ev(t0, A, "apA")], SessionPolicy(idle_timeout=1800))
    assert _spans(traj) == [("apA", t0, t0 + 1800)]


def test_switch_after_long_gap_capped_by_idle():
    t0 = 1000
    traj = sessionize(
        [_ev(t0, A, "apA"), _ev(t0 + 7200, A, "apB"), _ev(t0 + 7300, D, "apB")],
        SessionPolicy(idle_timeout=1800),
    )
    assert _spans(traj)[0] == ("apA", t0, t0 + 1800)


def test_drift_extends_and_reconnects():
    t0 = 1000
    traj = sessionize(
        [_ev(t0, A, "apA"), _ev(t0 + 1700, K, "apA")], SessionPolicy(idle_timeout=1800)
    )
    assert _spans(traj) == [("apA", t0, t0 + 3500)]
    # drift with no open session opens one (wake from sleep)
    traj = sessionize([_ev(t0, K, "apA"), _ev(t0 + 600, D, "apA")])
    assert _spans(traj) == [("apA", t0, t0 + 600)]


def test_reassociation_opens_without_prior_auth():
    t0 = 500
    traj = sessionize([_ev(t0, X, "apA"), _ev(t0 + 10, R, "apA"), _ev(t0 + 400, D, "apA")])
    assert _spans(traj) == [("apA", t0 + 10, t0 + 400)]


def test_duplicate_association_is_one_session():
    t0 = 100
    traj = sessionize([_ev(t0, A, "apA"), _ev(t0, A, "apA"), _ev(t0 + 900, D, "apA")])
    assert _spans(traj) == [("apA", t0, t0 + 900)]


def test_zero_length_session_dropped():
    # same-instant switch: apA's session would be [t0, t0) and is discarded
    t0 = 100
    traj = sessionize([_ev(t0, A, "apA"), _ev(t0, A, "apB"), _ev(t0 + 600, D, "apB")])
    assert _spans(traj) == [("apB", t0, t0 + 600)]


def test_same_second_close_sorts_before_open():
    # precedence processes the close first, so the association survives and
    # idle-closes later
    t0 = 100
    traj = sessionize([_ev(t0, A, "apA"), _ev(t0, D, "apA")], SessionPolicy(idle_timeout=1800))
    assert _spans(traj) == [("apA", t0, t0 + 1800)]


def test_same_instant_switch_uses_precedence():
    t0 = 100
    traj = sessionize(
        [_ev(t0, A, "apA"), _ev(t0 + 600, D, "apA"), _ev(t0 + 600, A, "apB"), _ev(t0 + 900, D, "apB")]
    )
    assert _spans(traj) == [("apA", t0, t0 + 600), ("apB", t0 + 600, t0 + 900)]


def test_authentication_has_no_session_effect():
    t0 = 100
    traj = sessionize([_ev(t0, U, "apA"), _ev(t0 + 10, A, "apA"), _ev(t0 + 500, D, "apA")])
    assert _spans(traj) == [("apA", t0 + 10, t0 + 500)]


def test_contract_violations():
    with pytest.raises(UnsortedInput):
        sessionize([_ev(100, A, "apA"), _ev(50, D, "apA")])
    with pytest.raises(MixedDevices):
        sessionize([_ev(100, A, "apA"), _ev(200, D, "apA", device="f" * 64)])


def test_min_session_filter():
    t0 = 100
    policy = SessionPolicy(min_session=300)
    traj = sessionize(
        [_ev(t0, A, "apA"), _ev(t0 + 100, A, "apB"), _ev(t0 + 800, D, "apB")], policy
    )
    assert _spans(traj) == [("apB", t0 + 100, t0 + 800)]


# -- kernel vs oracle, kernel vs fallback ---------------------------------------


def _random_stream(rng, n, n_aps=4):
    tokens = ["association", "disassociation", "reassociation",
              "deauthentication", "drift", "authentication"]
    t = 0
    events = []
    for _ in range(n):
        t += int(rng.integers(0, 1200))
        events.append((t, tokens[rng.integers(0, 6)], f"ap{rng.integers(0, n_aps)}"))
    return events


@pytest.mark.parametrize("idle", [600, 1800])
def test_kernel_matches_oracle_on_random_streams(rng, idle):
    token_code = {
        "disassociation": 0, "deauthentication": 1, "association": 2,
        "reassociation": 3, "drift": 4, "authentication": 5,
    }
    for trial in range(40):
        events = _random_stream(rng, int(rng.integers(1, 120)))
        expected = sessionize_oracle(events, idle)
        ap_ids = sorted({ap for _, _, ap in events})
        ap_idx = {a: i for i, a in enumerate(ap_ids)}
        n = len(events)
        dev = np.zeros(n, dtype=np.int64)
        ts = np.array([e[0] for e in events], dtype=np.int64)
        sub = np.array([token_code[e[1]] for e in events], dtype=np.int64)
        ap = np.array([ap_idx[e[2]] for e in events], dtype=np.int64)
        order = np.lexsort((ap, sub, ts, dev))
        dev, ts, sub, ap = dev[order], ts[order], sub[order], ap[order]
        keep = np.ones(n, dtype=bool)
        keep[1:] = (ts[1:] != ts[:-1]) | (sub[1:] != sub[:-1]) | (ap[1:] != ap[:-1])
        dev, ts, sub, ap = dev[keep], ts[keep], sub[keep], ap[keep]
        _, s_ap, s_start, s_end = _kernels.sessionize_arrays(dev, ts, sub, ap, idle)
        got = [(ap_ids[int(a)], int(s), int(e)) for a, s, e in zip(s_ap, s_start, s_end)]
        assert got == expected, f"trial {trial}"


def test_jitted_kernel_equals_python_fallback(rng):
    n = 5000
    dev = np.sort(rng.integers(0, 40, n)).astype(np.int64)
    ts = np.sort(rng.integers(0, 86400, n)).astype(np.int64)
    sub = rng.integers(0, 6, n).astype(np.int64)
    ap = rng.integers(0, 5, n).astype(np.int64)
    order = np.lexsort((ap, sub, ts, dev))
    dev, ts, sub, ap = dev[order], ts[order], sub[order], ap[order]
    out_a = [np.empty(n + 1, dtype=np.int64) for _ in range(4)]
    out_b = [np.empty(n + 1, dtype=np.int64) for _ in range(4)]
    m_a = _kernels._sessionize_impl(dev, ts, sub, ap, np.int64(900), np.int64(0), *out_a)
    m_b = _kernels._sessionize_loop(dev, ts, sub, ap, np.int64(900), np.int64(0), *out_b)
    assert m_a == m_b
    for a, b in zip(out_a, out_b):
        assert np.array_equal(a[:m_a], b[:m_b])


def test_batch_equals_per_device_partitioning(campus, rng):
    ap_ids = campus.ap_ids
    lines = []
    t = 8 * 3600
    for _ in range(800):
        t += int(rng.integers(0, 60))
        mac = "02:00:00:00:00:%02X" % rng.integers(0, 12)
        token = ["association", "drift", "disassociation", "reassociation"][rng.integers(0, 4)]
        lines.append(
            f"{t//3600:02d}:{t%3600//60:02d}:{t%60:02d} c p {token} {mac} "
            f"AP={ap_ids[rng.integers(len(ap_ids))]}"
        )
    ctx = IngestContext(dt.date(2020, 2, 10), SALT, campus)
    cols = ingest_lines(lines, ctx)
    batch = SessionSet.from_events(cols)
    batch_trajs = batch.to_trajectories(campus)
    # same streams pushed through the single-device API, any partition order
    per_device = {}
    for hexid in sorted(batch.devices, reverse=True):
        idx = batch.devices.index(hexid)
        mask = cols.dev == idx
        events = [
            NormalizedEvent(int(t_), "c", "p", EventSubtype(int(s_)), hexid, ap_ids[int(a_)])
            for t_, s_, a_ in zip(cols.ts[mask], cols.sub[mask], cols.ap[mask])
        ]
        events.sort(key=lambda e: e.ts)
        per_device[hexid] = sessionize(events, topology=campus)
    for hexid, traj in per_device.items():
        got = [(s.ap, s.start, s.end) for s in batch_trajs.get(hexid, Trajectory(hexid)).sessions]
        want = [(s.ap, s.start, s.end) for s in traj.sessions]
        assert got == want


# -- store round trip ------------------------------------------------------------


def test_store_roundtrip(tmp_path, campus):
    dev1, dev2 = "a" * 64, "b" * 64
    trajs = [
        Trajectory(dev2, [Session(dev2, campus.ap_ids[1], 100, 400)]),
        Trajectory(dev1, [Session(dev1, campus.ap_ids[0], 50, 220), Session(dev1, campus.ap_ids[2], 220, 300)]),
    ]
    ss = SessionSet.from_trajectories(trajs, campus)
    path = tmp_path / "sessions.csv"
    ss.save(path, campus)
    text = path.read_text().splitlines()
    assert text[0] == "device,ap,start,end"
    assert text[1].startswith(dev1)  # sorted by device hex then start
    loaded = SessionSet.load(path, campus)
    assert len(loaded) == 3
    back = loaded.to_trajectories(campus)
    assert [(s.ap, s.start, s.end) for s in back[dev1].sessions] == [
        (campus.ap_ids[0], 50, 220),
        (campus.ap_ids[2], 220, 300),
    ]


# -- dedupe -----------------------------------------------------------------------


def test_dedupe_drops_duplicate_sessions():
    dev = "c" * 64
    t = Trajectory(dev, [Session(dev, "x", 0, 10), Session(dev, "x", 0, 10)])
    out = dedupe_devices([t])
    assert len(out[0].sessions) == 1


def test_static_device_dropped_when_enabled():
    dev = "d" * 64
    week = [Session(dev, "printer-ap", i * 86400, (i + 1) * 86400 - 30) for i in range(7)]
    static = Trajectory(dev, week)
    roaming = Trajectory("e" * 64, [Session("e" * 64, "apA", 0, 3600), Session("e" * 64, "apB", 4000, 7200)])
    kept = dedupe_devices([static, roaming], DedupePolicy(drop_static=True))
    assert [t.device for t in kept] == ["e" * 64]
    kept_default = dedupe_devices([static, roaming])
    assert len(kept_default) == 2


def test_injected_duplicates_recover_clean_sessions(campus, rng):
    ap_ids = campus.ap_ids
    base_lines = []
    t = 8 * 3600
    for _ in range(300):
        t += int(rng.integers(30, 90))
        mac = "02:00:00:00:00:%02X" % rng.integers(0, 6)
        token = ["association", "disassociation", "reassociation"][rng.integers(0, 3)]
        base_lines.append(
            f"{t//3600:02d}:{t%3600//60:02d}:{t%60:02d} c p {token} {mac} "
            f"AP={ap_ids[rng.integers(4)]}"
        )
    ctx = IngestContext(dt.date(2020, 2, 10), SALT, campus)
    clean = SessionSet.from_events(ingest_lines(base_lines, ctx))
    noisy_lines = []
    for line in base_lines:
        noisy_lines.append(line)
        if rng.random() < 0.05:
            noisy_lines.append(line)
    ctx2 = IngestContext(dt.date(2020, 2, 10), SALT, campus)
    noisy = SessionSet.from_events(ingest_lines(noisy_lines, ctx2))
    assert np.array_equal(clean.dev, noisy.dev)
    assert np.array_equal(clean.start, noisy.start)
    assert np.array_equal(clean.end, noisy.end)


def test_packed_sort_key_equals_plain_lexsort(rng):
    # from_events packs (ts, subtype, ap) into one key when the AP table is
    # small; shifting every ap index past the packing limit forces the
    # 4-key path, and both must produce identical sessions
    n = 20000
    cols = EventColumns(
        ts=np.sort(rng.integers(1_580_000_000, 1_580_050_000, n)).astype(np.int64),
        dev=rng.integers(0, 200, n).astype(np.int64),
        ap=rng.integers(0, 64, n).astype(np.int64),
        sub=rng.integers(0, 6, n).astype(np.int64),
        hint=np.zeros(n, dtype=np.int64),
        devices=[f"{i:064x}" for i in range(200)],
    )
    packed = SessionSet.from_events(cols)
    shifted = EventColumns(cols.ts, cols.dev, cols.ap + (1 << 14), cols.sub, cols.hint, cols.devices)
    plain = SessionSet.from_events(shifted)
    assert np.array_equal(packed.dev, plain.dev)
    assert np.array_equal(packed.start, plain.start)
    assert np.array_equal(packed.end, plain.end)
    assert np.array_equal(packed.ap + (1 << 14), plain.ap)
