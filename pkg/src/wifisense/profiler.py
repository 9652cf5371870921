"""User-group classification from authentication hints and dwell patterns.

Rule precedence is total, so every device receives exactly one role:

  1. never authenticated            -> Anonymous
  2. login_days <= visitor_max_days -> Visitor
  3. staff login type               -> Staff
  4. student login + a single day with > 5 h cumulative dorm dwell
                                    -> DormResident
  5. otherwise                      -> Student
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrajectory, SchemaError
from .ingest import EventColumns
from .model import AuthHint, EventSubtype, Role, Trajectory, UserProfile
from .sessions import SessionSet
from .topology import Topology


@dataclass
class ProfilePolicy:
    visitor_max_days: int = 3  # "several days of login" operationalized
    dorm_dwell_seconds: int = 5 * 3600  # strictly more than this on one day


@dataclass(frozen=True)
class AuthSummary:
    """Per-device authentication evidence within the semester window."""

    has_auth: bool
    login_days: int
    hint: AuthHint


def auth_summaries(
    events: EventColumns, topology: Topology, semester: tuple[dt.date, dt.date] | None = None
) -> dict[str, AuthSummary]:
    """Summarize authentication events per device: distinct local login
    days and the strongest role hint (staff wins over student)."""
    loc = topology.localizer
    mask = events.sub == int(EventSubtype.AUTHENTICATION)
    dev = events.dev[mask]
    days = loc.day_number(events.ts[mask])
    hints = events.hint[mask]
    if semester is not None:
        lo = loc.day_number_of_date(semester[0])
        hi = loc.day_number_of_date(semester[1])
        sel = (days >= lo) & (days <= hi)
        dev, days, hints = dev[sel], days[sel], hints[sel]
    out: dict[str, AuthSummary] = {}
    if len(dev):
        key = dev * (days.max() + 1 - days.min()) + (days - days.min())
        uniq_dd = np.unique(key)
        per_dev = np.unique(uniq_dd // (days.max() + 1 - days.min()), return_counts=True)
        staff = np.unique(dev[hints == int(AuthHint.STAFF_LOGIN)])
        student = np.unique(dev[hints == int(AuthHint.STUDENT_LOGIN)])
        staff_set = set(staff.tolist())
        student_set = set(student.tolist())
        for d, c in zip(per_dev[0].tolist(), per_dev[1].tolist()):
            if d in staff_set:
                h = AuthHint.STAFF_LOGIN
            elif d in student_set:
                h = AuthHint.STUDENT_LOGIN
            else:
                h = AuthHint.NONE
            out[events.devices[d]] = AuthSummary(True, int(c), h)
    for hexid in events.devices:
        out.setdefault(hexid, AuthSummary(False, 0, AuthHint.NONE))
    return out


def max_daily_dorm_dwell(traj: Trajectory, topology: Topology) -> int:
    """Largest per-local-calendar-day sum of dorm-area session seconds.

    Dwell is cumulative across a day's dorm sessions, not per visit;
    sessions crossing midnight are split at the local day boundary and
    charged in wall-clock seconds.
    """
    loc = topology.localizer
    from .model import AreaKind

    per_day: dict[int, int] = {}
    for s in traj.sessions:
        info = topology.aps.get(s.ap)
        if info is None or info.area_kind != AreaKind.DORM:
            continue
        l0 = int(loc.to_local(s.start))
        l1 = int(loc.to_local(s.end - 1)) + 1
        d0, d1 = l0 // 86400, (l1 - 1) // 86400
        for d in range(d0, d1 + 1):
            lo = max(l0, d * 86400)
            hi = min(l1, (d + 1) * 86400)
            if hi > lo:
                per_day[d] = per_day.get(d, 0) + (hi - lo)
    return max(per_day.values()) if per_day else 0


def classify(
    trajectory: Trajectory,
    auth: AuthSummary,
    topology: Topology,
    semester: tuple[dt.date, dt.date],
    policy: ProfilePolicy | None = None,
) -> UserProfile:
    """Pure rule application; see the precedence order in the module docstring."""
    policy = policy or ProfilePolicy()
    if not trajectory.sessions:
        raise EmptyTrajectory(f"device {trajectory.device[:8]}… has no sessions")
    dorm_dwell = max_daily_dorm_dwell(trajectory, topology)
    if not auth.has_auth:
        role = Role.ANONYMOUS
    elif auth.login_days <= policy.visitor_max_days:
        role = Role.VISITOR
    elif auth.hint == AuthHint.STAFF_LOGIN:
        role = Role.STAFF
    elif auth.hint == AuthHint.STUDENT_LOGIN and dorm_dwell > policy.dorm_dwell_seconds:
        role = Role.DORM_RESIDENT
    else:
        role = Role.STUDENT
    return UserProfile(
        device=trajectory.device,
        role=role,
        login_days=auth.login_days,
        max_daily_dorm_dwell=dorm_dwell,
        has_auth=auth.has_auth,
    )


def classify_all(
    sessions: SessionSet,
    auths: dict[str, AuthSummary],
    topology: Topology,
    semester: tuple[dt.date, dt.date],
    policy: ProfilePolicy | None = None,
) -> list[UserProfile]:
    policy = policy or ProfilePolicy()
    trajs = sessions.to_trajectories(topology)
    out = []
    default = AuthSummary(False, 0, AuthHint.NONE)
    for hexid in sessions.devices:
        traj = trajs.get(hexid)
        if traj is None or not traj.sessions:
            continue
        out.append(classify(traj, auths.get(hexid, default), topology, semester, policy))
    return out


# -- stores ------------------------------------------------------------

PROFILE_HEADER = "device,role,login_days,max_daily_dorm_dwell,has_auth"


def save_profiles(profiles, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(PROFILE_HEADER + "\n")
        for p in sorted(profiles, key=lambda p: p.device):
            f.write(
                f"{p.device},{p.role.value},{p.login_days},{p.max_daily_dorm_dwell},"
                f"{1 if p.has_auth else 0}\n"
            )


def load_profiles(path) -> dict[str, UserProfile]:
    out: dict[str, UserProfile] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != PROFILE_HEADER:
            raise SchemaError(f"unexpected profile store header {header!r}")
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 5:
                raise SchemaError(f"profile store line {lineno}: expected 5 fields")
            dev, role, days, dwell, has_auth = parts
            out[dev] = UserProfile(dev, Role(role), int(days), int(dwell), has_auth == "1")
    return out


AUTH_HEADER = "device,date,hint"

_HINT_TOKEN = {AuthHint.NONE: "none", AuthHint.STAFF_LOGIN: "staff", AuthHint.STUDENT_LOGIN: "student"}
_TOKEN_HINT = {v: k for k, v in _HINT_TOKEN.items()}


def save_auth_events(events: EventColumns, topology: Topology, path) -> None:
    """Sidecar of per-device login days; authentication events do not
    produce sessions, so the session store cannot carry this."""
    loc = topology.localizer
    mask = events.sub == int(EventSubtype.AUTHENTICATION)
    dev = events.dev[mask]
    days = loc.day_number(events.ts[mask])
    hints = events.hint[mask]
    seen = set()
    rows = []
    for d, day, h in zip(dev.tolist(), days.tolist(), hints.tolist()):
        key = (d, day, h)
        if key in seen:
            continue
        seen.add(key)
        rows.append((events.devices[d], loc.day_iso(day), _HINT_TOKEN[AuthHint(h)]))
    rows.sort()
    with open(path, "w", encoding="utf-8") as f:
        f.write(AUTH_HEADER + "\n")
        for r in rows:
            f.write(",".join(r) + "\n")


def load_auth_summaries(path, semester: tuple[dt.date, dt.date] | None = None) -> dict[str, AuthSummary]:
    days: dict[str, set] = {}
    hints: dict[str, AuthHint] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != AUTH_HEADER:
            raise SchemaError(f"unexpected auth store header {header!r}")
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 3:
                raise SchemaError(f"auth store line {lineno}: expected 3 fields")
            dev, date_s, hint_s = parts
            d = dt.date.fromisoformat(date_s)
            if semester is not None and not (semester[0] <= d <= semester[1]):
                continue
            days.setdefault(dev, set()).add(d)
            h = _TOKEN_HINT.get(hint_s, AuthHint.NONE)
            prev = hints.get(dev, AuthHint.NONE)
            if h == AuthHint.STAFF_LOGIN or (h == AuthHint.STUDENT_LOGIN and prev != AuthHint.STAFF_LOGIN):
                hints[dev] = h
            else:
                hints.setdefault(dev, prev)
    return {
        dev: AuthSummary(True, len(ds), hints.get(dev, AuthHint.NONE)) for dev, ds in days.items()
    }
