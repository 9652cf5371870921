import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wifisense.topology import APInfo, Topology
from wifisense.model import AreaKind

SALT = b"unit-test-salt"


def small_campus() -> Topology:
    """Two buildings, one dorm; enough structure for every granularity."""
    infos = []
    for b, kind, floors, areas, aps in (
        ("b1", AreaKind.ACADEMIC, 2, 2, 2),
        ("b2", AreaKind.DINING, 1, 1, 2),
        ("d1", AreaKind.DORM, 1, 2, 1),
    ):
        for f in range(1, floors + 1):
            for a in range(1, areas + 1):
                for k in range(1, aps + 1):
                    infos.append(
                        APInfo(
                            ap=f"{b}-f{f}-a{a}-ap{k}",
                            building=b,
                            floor=f"{b}-f{f}",
                            area=f"{b}-f{f}-a{a}",
                            area_kind=kind,
                            x=float(10 * a + k),
                            y=float(5 * f),
                        )
                    )
    return Topology(infos, "Asia/Singapore")


@pytest.fixture(scope="session")
def campus() -> Topology:
    return small_campus()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)


def local_ts(campus: Topology, text: str) -> int:
    return campus.localizer.parse_instant(text)


@pytest.fixture(scope="session")
def day0(campus) -> int:
    """Epoch seconds of 2020-02-10T00:00 campus-local."""
    return campus.localizer.parse_instant("2020-02-10T00:00")
