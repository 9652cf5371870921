"""Passive WiFi-sensing analytics toolkit.

Turns enterprise access-point event logs into privacy-preserving occupancy
and mobility metrics, compares them across policy phases, and serves them
to a compliance dashboard. A synthetic campus generator provides ground
truth for end-to-end verification.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AreaKind,
    AuthHint,
    EventSubtype,
    Granularity,
    NormalizedEvent,
    Phase,
    PhaseConfig,
    Role,
    Session,
    Trajectory,
    UserProfile,
    load_phases,
)
from .topology import Topology, load_topology  # noqa: F401
