import json

import pytest
from fastapi.testclient import TestClient

from conftest import SALT
from wifisense import synth
from wifisense.ingest import ingest_files
from wifisense.reports import write_json
from wifisense.sessions import SessionSet
from wifisense.service import ServiceConfig, ThresholdPolicy, build_app

TOKEN = "secret-token"


@pytest.fixture(scope="module")
def violation_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("violation")
    gen = synth.generate(synth.preset("dorm-violation"), SALT)
    synth.write_outputs(gen, root, include_truth=False)
    paths = sorted((root / "logs").glob("*.log"))
    cols = ingest_files(paths, gen.topology, SALT)
    sessions = SessionSet.from_events(cols)
    sessions.save(root / "sessions.csv", gen.topology)
    config = ServiceConfig(
        topology_path=str(root / "topology.json"),
        sessions_path=str(root / "sessions.csv"),
        thresholds_path=str(root / "thresholds.json"),
        token=TOKEN,
        refresh_interval=0,  # tests drive refresh explicitly
    )
    app = build_app(config)
    with TestClient(app) as client:
        yield client, gen, root


def test_building_listing(violation_env):
    client, gen, _ = violation_env
    res = client.get("/v1/buildings")
    assert res.status_code == 200
    body = res.json()
    assert [b["id"] for b in body] == gen.topology.buildings()
    res = client.get("/v1/buildings/d1/floors")
    floors = [f["id"] for f in res.json()]
    assert floors == gen.topology.floors_of("d1")
    res = client.get(f"/v1/floors/{floors[0]}/aps")
    assert {a["id"] for a in res.json()} == {i.ap for i in gen.topology.aps_of_floor(floors[0])}


def test_unknown_units_404(violation_env):
    client, _, _ = violation_env
    assert client.get("/v1/buildings/nope/floors").status_code == 404
    assert client.get("/v1/floors/nope/aps").status_code == 404
    res = client.get("/v1/occupancy", params={"unit": "nope", "granularity": "Area"})
    assert res.status_code == 404
    assert set(res.json()) == {"code", "message"}


def test_bad_requests_400(violation_env):
    client, _, _ = violation_env
    res = client.get(
        "/v1/occupancy",
        params={"unit": "d1-f1-a1", "granularity": "Area", "from": "2020-02-10T00:00"},
    )
    assert res.status_code == 400
    res = client.get(
        "/v1/occupancy",
        params={
            "unit": "d1-f1-a1", "granularity": "Area",
            "from": "2020-02-12T00:00", "to": "2020-02-10T00:00",
        },
    )
    assert res.status_code == 400
    res = client.get("/v1/occupancy", params={"unit": "d1", "granularity": "Campus"})
    assert res.status_code == 400


def test_occupancy_identity_every_bucket(violation_env):
    client, gen, _ = violation_env
    for area in {i.area for i in gen.topology.aps.values()}:
        res = client.get("/v1/occupancy", params={"unit": area, "granularity": "Area"})
        assert res.status_code == 200
        body = res.json()
        assert body["threshold"] == 100
        for pt in body["points"]:
            assert pt["count"] == pt["normal"] + pt["target_excess"]
            assert pt["normal"] <= 100


def test_exactly_one_bucket_with_excess(violation_env):
    client, gen, _ = violation_env
    offenders = []
    for area in sorted({i.area for i in gen.topology.aps.values()}):
        body = client.get("/v1/occupancy", params={"unit": area, "granularity": "Area"}).json()
        offenders += [
            (area, pt["bucket"], pt["target_excess"])
            for pt in body["points"]
            if pt["target_excess"] > 0
        ]
    assert offenders == [("d1-f1-a1", "2020-02-11T20:00", 20)]


def test_heatmap_marks_over_threshold_cells(violation_env):
    client, gen, _ = violation_env
    res = client.get("/v1/heatmap", params={"floor": "d1-f1", "bucket": "2020-02-11T20:00"})
    assert res.status_code == 200
    cells = res.json()["cells"]
    over = {c["ap"] for c in cells if c["over"]}
    assert over == {"d1-f1-a1-ap1"}
    for c in cells:
        assert c["over"] == (c["threshold"] is not None and c["count"] > c["threshold"])
    quiet = client.get("/v1/heatmap", params={"floor": "d1-f1", "bucket": "2020-02-10T03:00"})
    assert quiet.status_code == 200
    assert all(not c["over"] for c in quiet.json()["cells"])


def test_heatmap_consistent_with_occupancy(violation_env):
    client, gen, _ = violation_env
    cells = client.get(
        "/v1/heatmap", params={"floor": "d1-f1", "bucket": "2020-02-11T20:00"}
    ).json()["cells"]
    for c in cells:
        body = client.get(
            "/v1/occupancy",
            params={
                "unit": c["ap"], "granularity": "AP",
                "from": "2020-02-11T20:00", "to": "2020-02-11T21:00",
            },
        ).json()
        got = body["points"][0]["count"] if body["points"] else 0
        assert got == c["count"]


def test_occupants_requires_token(violation_env):
    client, gen, _ = violation_env
    params = {"ap": "d1-f1-a1-ap1", "bucket": "2020-02-11T20:00"}
    assert client.get("/v1/occupants", params=params).status_code == 401
    bad = client.get("/v1/occupants", params=params, headers={"Authorization": "Bearer wrong"})
    assert bad.status_code == 401
    ok = client.get("/v1/occupants", params=params, headers={"Authorization": f"Bearer {TOKEN}"})
    assert ok.status_code == 200
    devices = ok.json()["devices"]
    assert len(devices) == 120
    assert all(len(d) == 64 and set(d) <= set("0123456789abcdef") for d in devices)


def test_occupants_match_session_store(violation_env):
    client, gen, root = violation_env
    params = {"ap": "d1-f1-a2-ap1", "bucket": "2020-02-10T23:00"}
    res = client.get("/v1/occupants", params=params, headers={"Authorization": f"Bearer {TOKEN}"})
    got = set(res.json()["devices"])
    loc = gen.topology.localizer
    want = set()
    b = loc.parse_local("2020-02-10T23:00") // 3600
    for line in (root / "sessions.csv").read_text().splitlines()[1:]:
        dev, ap, start, end = line.split(",")
        if ap != "d1-f1-a2-ap1":
            continue
        if int(loc.hour_bucket(int(start))) <= b <= int(loc.hour_bucket(int(end) - 1)):
            want.add(dev)
    assert got == want


def test_transitions_endpoint_returns_chord_doc(violation_env):
    client, _, _ = violation_env
    res = client.get("/v1/transitions", params={"scope": "Area"})
    assert res.status_code == 200
    doc = res.json()
    assert doc["schema"] == "wifisense.transitions/1"
    assert len(doc["counts"]) == len(doc["units"])
    for i in range(len(doc["units"])):
        assert doc["counts"][i][i] == 0


def test_repeated_queries_identical(violation_env):
    client, _, _ = violation_env
    params = {"unit": "d1", "granularity": "Building"}
    a = client.get("/v1/occupancy", params=params).content
    b = client.get("/v1/occupancy", params=params).content
    assert a == b


def test_no_response_contains_mac(violation_env):
    client, _, _ = violation_env
    from wifisense.model import MAC_RE

    for path, params in [
        ("/v1/buildings", {}),
        ("/v1/occupancy", {"unit": "d1", "granularity": "Building"}),
        ("/v1/heatmap", {"floor": "d1-f1", "bucket": "2020-02-11T20:00"}),
        ("/v1/transitions", {"scope": "Building"}),
    ]:
        res = client.get(path, params=params)
        assert MAC_RE.search(res.text) is None


def test_threshold_hot_reload(violation_env):
    client, gen, root = violation_env
    thresholds = json.loads((root / "thresholds.json").read_text())
    try:
        thresholds["area_kinds"]["Dorm"] = 500
        write_json(root / "thresholds.json", thresholds)
        client.app.state.holder.refresh()
        body = client.get("/v1/occupancy", params={"unit": "d1-f1-a1", "granularity": "Area"}).json()
        assert body["threshold"] == 500
        assert all(pt["target_excess"] == 0 for pt in body["points"])
    finally:
        thresholds["area_kinds"]["Dorm"] = 100
        write_json(root / "thresholds.json", thresholds)
        client.app.state.holder.refresh()


def test_unit_threshold_overrides_kind():
    policy = ThresholdPolicy.from_doc(
        {"units": {"d1-f1-a1": 80, "cap": {"fraction": 0.5, "capacity": 60}}, "area_kinds": {"Dorm": 100}}
    )
    from conftest import small_campus

    campus = small_campus()
    from wifisense.model import Granularity

    dorm_areas = sorted({i.area for i in campus.aps.values() if i.area_kind.value == "Dorm"})
    assert dorm_areas == ["d1-f1-a1", "d1-f1-a2"]
    assert policy.threshold_for(campus, Granularity.AREA, "d1-f1-a1") == 80  # override wins
    assert policy.threshold_for(campus, Granularity.AREA, "d1-f1-a2") == 100  # kind fallback
    assert policy.units["cap"] == 30
    academic = next(i.area for i in campus.aps.values() if i.area_kind.value == "Academic")
    assert policy.threshold_for(campus, Granularity.AREA, academic) is None


def test_occupants_refuses_without_configured_token(violation_env, tmp_path):
    _, gen, root = violation_env
    from wifisense.service import ServiceConfig, build_app
    from fastapi.testclient import TestClient

    config = ServiceConfig(
        topology_path=str(root / "topology.json"),
        sessions_path=str(root / "sessions.csv"),
        token=None,
        refresh_interval=0,
    )
    with TestClient(build_app(config)) as client:
        res = client.get(
            "/v1/occupants", params={"ap": "d1-f1-a1-ap1", "bucket": "2020-02-11T20:00"}
        )
        assert res.status_code == 401
