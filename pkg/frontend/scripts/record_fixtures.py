#!/usr/bin/env python3
"""Record service responses over the lunch and violation presets as test
fixtures for the dashboard suite. Run from the repo root after installing
the Python package:

    python3 frontend/scripts/record_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from wifisense import synth
from wifisense.ingest import ingest_files
from wifisense.sessions import SessionSet
from wifisense.service import ServiceConfig, build_app

SALT = b"fixture-salt"
OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def serve(preset_name):
    tmp = Path(tempfile.mkdtemp(prefix=f"fixtures-{preset_name}-"))
    gen = synth.generate(synth.preset(preset_name), SALT, with_truth=False)
    synth.write_outputs(gen, tmp, include_truth=False)
    cols = ingest_files(sorted((tmp / "logs").glob("*.log")), gen.topology, SALT)
    SessionSet.from_events(cols).save(tmp / "sessions.csv", gen.topology)
    config = ServiceConfig(
        topology_path=str(tmp / "topology.json"),
        sessions_path=str(tmp / "sessions.csv"),
        thresholds_path=str(tmp / "thresholds.json"),
        refresh_interval=0,
    )
    return TestClient(build_app(config))


def save(name, response):
    assert response.status_code == 200, (name, response.status_code, response.text)
    OUT.joinpath(name).write_text(json.dumps(response.json(), indent=2, sort_keys=True) + "\n")
    print("recorded", name)


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    with serve("dorm-violation") as client:
        save("violation-buildings.json", client.get("/v1/buildings"))
        save("violation-floors.json", client.get("/v1/buildings/d1/floors"))
        save("violation-floor-aps.json", client.get("/v1/floors/d1-f1/aps"))
        save(
            "violation-occupancy-area.json",
            client.get("/v1/occupancy", params={"unit": "d1-f1-a1", "granularity": "Area",
                                                "from": "2020-02-11T00:00", "to": "2020-02-12T00:00"}),
        )
        save(
            "violation-heatmap.json",
            client.get("/v1/heatmap", params={"floor": "d1-f1", "bucket": "2020-02-11T20:00"}),
        )
        save(
            "violation-heatmap-quiet.json",
            client.get("/v1/heatmap", params={"floor": "d1-f1", "bucket": "2020-02-10T03:00"}),
        )

    with serve("lunch-rush") as client:
        save("lunch-buildings.json", client.get("/v1/buildings"))
        save(
            "lunch-transitions-noon.json",
            client.get("/v1/transitions", params={"scope": "Building",
                                                  "from": "2020-01-13T12:00", "to": "2020-01-13T13:00"}),
        )
        save(
            "lunch-occupancy-dining.json",
            client.get("/v1/occupancy", params={"unit": "b7", "granularity": "Building",
                                                "from": "2020-01-13T08:00", "to": "2020-01-13T20:00"}),
        )


if __name__ == "__main__":
    main()
