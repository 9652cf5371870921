"""Core domain types: events, sessions, trajectories, profiles, phases."""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

from .errors import OrderError, OverlapError, SchemaError

# Any six colon-separated hex octets; used both for parsing and for the
# leak scan that asserts no raw MAC ever reaches an output artifact.
MAC_RE = re.compile(r"\b[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}\b")

_DEVICE_RE = re.compile(r"^[0-9a-f]{64}$")

# Days between 0001-01-01 and 1970-01-01; converts date.toordinal() to
# epoch-day numbers used for local-day bucketing.
EPOCH_ORDINAL = dt.date(1970, 1, 1).toordinal()


class EventSubtype(IntEnum):
    """The six AP event types.

    Integer values double as the tie-break precedence for events that share
    a timestamp: closes sort before opens so an AP switch logged at one
    instant resolves deterministically.
    """

    DISASSOCIATION = 0
    DEAUTHENTICATION = 1
    ASSOCIATION = 2
    REASSOCIATION = 3
    DRIFT = 4
    AUTHENTICATION = 5


SUBTYPE_TOKENS = {
    "association": EventSubtype.ASSOCIATION,
    "disassociation": EventSubtype.DISASSOCIATION,
    "reassociation": EventSubtype.REASSOCIATION,
    "authentication": EventSubtype.AUTHENTICATION,
    "deauthentication": EventSubtype.DEAUTHENTICATION,
    "drift": EventSubtype.DRIFT,
}

TOKEN_OF_SUBTYPE = {v: k for k, v in SUBTYPE_TOKENS.items()}


class AreaKind(str, Enum):
    ACADEMIC = "Academic"
    DORM = "Dorm"
    DINING = "Dining"
    RECREATION = "Recreation"
    LIBRARY = "Library"
    TRANSIT = "Transit"
    OTHER = "Other"


class Role(str, Enum):
    STAFF = "Staff"
    STUDENT = "Student"
    DORM_RESIDENT = "DormResident"
    VISITOR = "Visitor"
    ANONYMOUS = "Anonymous"


class AuthHint(IntEnum):
    """Login type carried by an authentication event body."""

    NONE = 0
    STAFF_LOGIN = 1
    STUDENT_LOGIN = 2


class Granularity(str, Enum):
    AP = "AP"
    AREA = "Area"
    FLOOR = "Floor"
    BUILDING = "Building"


def is_device_id(value: str) -> bool:
    """True when ``value`` is a 64-char lowercase hex digest."""
    return bool(_DEVICE_RE.match(value))


@dataclass(frozen=True)
class NormalizedEvent:
    """One timestamped, anonymized AP event; the atom of the pipeline."""

    ts: int  # absolute epoch seconds
    controller: str
    process_id: str
    subtype: EventSubtype
    device: str  # 64-char hex digest
    ap: str
    auth_role_hint: AuthHint = AuthHint.NONE


@dataclass(frozen=True)
class Session:
    """A device's contiguous association with one AP."""

    device: str
    ap: str
    start: int
    end: int

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"session end {self.end} must exceed start {self.start}")

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass
class Trajectory:
    """A device's time-ordered session sequence across APs."""

    device: str
    sessions: list[Session] = field(default_factory=list)

    def validate(self) -> None:
        prev_end = None
        for s in self.sessions:
            if s.device != self.device:
                raise ValueError(f"session device {s.device} != trajectory {self.device}")
            if prev_end is not None and s.start < prev_end:
                raise ValueError("sessions overlap or are unsorted")
            prev_end = s.end


@dataclass(frozen=True)
class UserProfile:
    device: str
    role: Role
    login_days: int
    max_daily_dorm_dwell: int  # seconds
    has_auth: bool


@dataclass(frozen=True)
class Phase:
    """A named, date-ranged policy phase. Both dates are inclusive."""

    name: str
    start_date: dt.date
    end_date: dt.date
    description: str = ""

    @property
    def day_range(self) -> tuple[int, int]:
        """Half-open range of local epoch-day numbers covered by the phase."""
        return (
            self.start_date.toordinal() - EPOCH_ORDINAL,
            self.end_date.toordinal() - EPOCH_ORDINAL + 1,
        )

    @property
    def n_days(self) -> int:
        lo, hi = self.day_range
        return hi - lo


class PhaseConfig:
    """Ordered, non-overlapping policy phases driving comparative analytics."""

    def __init__(self, phases: list[Phase]):
        for p in phases:
            if p.end_date < p.start_date:
                raise OrderError(f"phase {p.name!r} ends before it starts")
        for a, b in zip(phases, phases[1:]):
            if b.start_date < a.start_date:
                raise OrderError(f"phase {b.name!r} starts before {a.name!r}")
            if b.start_date <= a.end_date:
                raise OverlapError(f"phases {a.name!r} and {b.name!r} overlap")
        names = [p.name for p in phases]
        if len(set(names)) != len(names):
            raise SchemaError("phase names must be unique")
        self.phases: tuple[Phase, ...] = tuple(phases)
        self._by_name = {p.name: p for p in phases}

    def __iter__(self):
        return iter(self.phases)

    def __len__(self):
        return len(self.phases)

    def __getitem__(self, name: str) -> Phase:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown phase {name!r}") from None

    def names(self) -> list[str]:
        return [p.name for p in self.phases]

    def phase_of_day(self, day_number: int) -> Phase | None:
        """The unique phase containing a local epoch-day number, if any."""
        for p in self.phases:
            lo, hi = p.day_range
            if lo <= day_number < hi:
                return p
        return None

    def to_doc(self) -> dict:
        return {
            "schema": "wifisense.phases/1",
            "phases": [
                {
                    "name": p.name,
                    "start_date": p.start_date.isoformat(),
                    "end_date": p.end_date.isoformat(),
                    "description": p.description,
                }
                for p in self.phases
            ],
        }


def load_phases(source) -> PhaseConfig:
    """Load a phase document (JSON) from a path, text, or parsed dict."""
    doc = _load_doc(source, "phase")
    rows = doc.get("phases")
    if not isinstance(rows, list):
        raise SchemaError("phase document requires a 'phases' list")
    phases = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise SchemaError(f"phase row {i} is not an object")
        try:
            name = row["name"]
            start = dt.date.fromisoformat(row["start_date"])
            end = dt.date.fromisoformat(row["end_date"])
        except KeyError as exc:
            raise SchemaError(f"phase row {i} missing field {exc}") from None
        except ValueError as exc:
            raise SchemaError(f"phase row {i}: {exc}") from None
        phases.append(Phase(name, start, end, row.get("description", "")))
    return PhaseConfig(phases)


def _load_doc(source, what: str) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str):
        # Heuristic: anything that parses as JSON is the document itself.
        stripped = source.lstrip()
        if stripped.startswith("{"):
            text = source
        else:
            text = Path(source).read_text()
    else:
        raise SchemaError(f"cannot load a {what} document from {type(source).__name__}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{what} document must be a JSON object")
    return doc


@dataclass
class OccupancySeries:
    """Distinct-device counts per (spatial unit, time bucket).

    ``bucket`` is "hour" or "day"; bucket keys are local hour numbers
    (local epoch seconds // 3600) or local day numbers respectively.
    """

    granularity: Granularity
    bucket: str
    counts: dict[tuple[str, int], int]
    timezone: str = "UTC"

    def get(self, unit: str, bucket: int) -> int:
        return self.counts.get((unit, bucket), 0)

    def units(self) -> list[str]:
        return sorted({u for u, _ in self.counts})

    def buckets(self) -> list[int]:
        return sorted({b for _, b in self.counts})


@dataclass
class TransitionMatrix:
    """Movement counts between spatial units; diagonal is structurally zero."""

    scope: Granularity
    window: tuple[int, int] | None
    counts: dict[tuple[str, str], int]

    def get(self, src: str, dst: str) -> int:
        return self.counts.get((src, dst), 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def units(self) -> list[str]:
        seen = set()
        for a, b in self.counts:
            seen.add(a)
            seen.add(b)
        return sorted(seen)
