"""Synthetic campus generator: topology, agent schedules, syslog emission.

Agents follow role-conditioned daily schedule templates (staff are
office-centric, students rotate classrooms/library/dining, dorm residents
anchor overnight in their dormitory). Every ground-truth figure — per-hour
occupancy, transition counts, unique-place counts — is computed directly
from the agent schedules through an independent datetime-based route, never
through the analytics pipeline, so the generator doubles as the end-to-end
oracle. With a zero loss model the pipeline must reproduce the schedule
exactly; the loss model (drops, duplicate logging, reorder jitter) bounds
how far it may fall short.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .errors import ConfigError
from .ingest import RawEvent, anonymize
from .model import EPOCH_ORDINAL, AreaKind, Phase, PhaseConfig, Role
from .topology import Topology, APInfo

_EPOCH_NAIVE = dt.datetime(1970, 1, 1)

ROLE_KEYS = {
    "staff": Role.STAFF,
    "student": Role.STUDENT,
    "dorm_resident": Role.DORM_RESIDENT,
    "visitor": Role.VISITOR,
    "anonymous": Role.ANONYMOUS,
}

# local working hours per role: (start_h, end_h)
_ROLE_WINDOW = {
    Role.STAFF: (8.5, 17.5),
    Role.STUDENT: (9.0, 17.5),
    Role.VISITOR: (10.0, 16.0),
    Role.ANONYMOUS: (9.5, 16.5),
    Role.DORM_RESIDENT: (10.0, 17.0),  # daytime trips; nights are anchored
}

_MIN_VISIT = 360  # seconds; keeps every scheduled visit comfortably qualified


@dataclass
class BuildingSpec:
    id: str
    kind: AreaKind = AreaKind.ACADEMIC
    floors: int = 1
    areas_per_floor: int = 1
    aps_per_area: int = 1


@dataclass
class PopulationSpec:
    staff: int = 0
    student: int = 0
    dorm_resident: int = 0
    visitor: int = 0
    anonymous: int = 0

    def total(self) -> int:
        return self.staff + self.student + self.dorm_resident + self.visitor + self.anonymous


@dataclass
class SpikeSpec:
    """Pull ``count`` devices from other areas into ``area`` for one hour."""

    area: str
    day: int  # index within the phase
    hour: int  # local hour of day
    count: int


@dataclass
class PhaseSpec:
    name: str
    start: dt.date
    days: int
    occupancy_scale: float = 1.0
    split_team: bool = False
    lunch_building: str | None = None
    places_ramp: list[tuple[float, int]] | None = None  # (quantile, unique places)
    spike: SpikeSpec | None = None
    description: str = ""

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=self.days - 1)


@dataclass
class LossModel:
    drop_rate: float = 0.0
    duplicate_rate: float = 0.0
    jitter_s: int = 0


@dataclass
class ScenarioConfig:
    seed: int
    timezone: str
    buildings: list[BuildingSpec]
    population: PopulationSpec
    phases: list[PhaseSpec]
    loss: LossModel = field(default_factory=LossModel)
    thresholds: dict | None = None
    name: str = "custom"
    student_cohorts: dict[str, int] | None = None  # explicit students per building

    def validate(self) -> None:
        if not self.buildings:
            raise ConfigError("scenario needs at least one building")
        if not self.phases:
            raise ConfigError("scenario needs at least one phase")
        for p in self.phases:
            if not 0.0 <= p.occupancy_scale <= 1.0:
                raise ConfigError(f"phase {p.name!r}: occupancy_scale outside [0, 1]")
            if p.days < 1:
                raise ConfigError(f"phase {p.name!r}: needs at least one day")
        for rate in (self.loss.drop_rate, self.loss.duplicate_rate):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError("loss rates must lie in [0, 1]")
        if self.loss.jitter_s < 0 or self.loss.jitter_s > 60:
            raise ConfigError("jitter must lie in [0, 60] seconds to stay re-orderable")
        if self.population.dorm_resident and not any(
            b.kind == AreaKind.DORM for b in self.buildings
        ):
            raise ConfigError("dorm residents require a Dorm building")

    # -- JSON round trip -------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "schema": "wifisense.scenario/1",
            "name": self.name,
            "seed": self.seed,
            "timezone": self.timezone,
            "buildings": [
                {
                    "id": b.id,
                    "kind": b.kind.value,
                    "floors": b.floors,
                    "areas_per_floor": b.areas_per_floor,
                    "aps_per_area": b.aps_per_area,
                }
                for b in self.buildings
            ],
            "population": {k: getattr(self.population, k) for k in ROLE_KEYS},
            "phases": [
                {
                    "name": p.name,
                    "start": p.start.isoformat(),
                    "days": p.days,
                    "occupancy_scale": p.occupancy_scale,
                    "split_team": p.split_team,
                    "lunch_building": p.lunch_building,
                    "places_ramp": p.places_ramp,
                    "spike": None
                    if p.spike is None
                    else {
                        "area": p.spike.area,
                        "day": p.spike.day,
                        "hour": p.spike.hour,
                        "count": p.spike.count,
                    },
                    "description": p.description,
                }
                for p in self.phases
            ],
            "loss": {
                "drop_rate": self.loss.drop_rate,
                "duplicate_rate": self.loss.duplicate_rate,
                "jitter_s": self.loss.jitter_s,
            },
            "thresholds": self.thresholds,
            "student_cohorts": self.student_cohorts,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ScenarioConfig":
        try:
            phases = []
            for p in doc["phases"]:
                spike = p.get("spike")
                phases.append(
                    PhaseSpec(
                        name=p["name"],
                        start=dt.date.fromisoformat(p["start"]),
                        days=int(p["days"]),
                        occupancy_scale=float(p.get("occupancy_scale", 1.0)),
                        split_team=bool(p.get("split_team", False)),
                        lunch_building=p.get("lunch_building"),
                        places_ramp=[tuple(x) for x in p["places_ramp"]]
                        if p.get("places_ramp")
                        else None,
                        spike=None
                        if spike is None
                        else SpikeSpec(spike["area"], spike["day"], spike["hour"], spike["count"]),
                        description=p.get("description", ""),
                    )
                )
            cfg = cls(
                seed=int(doc["seed"]),
                timezone=doc["timezone"],
                buildings=[
                    BuildingSpec(
                        id=b["id"],
                        kind=AreaKind(b.get("kind", "Academic")),
                        floors=int(b.get("floors", 1)),
                        areas_per_floor=int(b.get("areas_per_floor", 1)),
                        aps_per_area=int(b.get("aps_per_area", 1)),
                    )
                    for b in doc["buildings"]
                ],
                population=PopulationSpec(**{k: int(doc["population"].get(k, 0)) for k in ROLE_KEYS}),
                phases=phases,
                loss=LossModel(**doc.get("loss", {})),
                thresholds=doc.get("thresholds"),
                name=doc.get("name", "custom"),
                student_cohorts=doc.get("student_cohorts"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario document: {exc!r}") from None
        cfg.validate()
        return cfg


def emit(event: RawEvent) -> str:
    """Render one event in the wire grammar; parse_line inverts this."""
    return (
        f"{event.time_of_day} {event.controller} {event.process_id} "
        f"{event.subtype_token} {event.mac} {event.body}"
    )


def build_topology(config: ScenarioConfig) -> Topology:
    infos = []
    for b in config.buildings:
        for f in range(b.floors):
            floor_id = f"{b.id}-f{f + 1}"
            for a in range(b.areas_per_floor):
                area_id = f"{floor_id}-a{a + 1}"
                for k in range(b.aps_per_area):
                    infos.append(
                        APInfo(
                            ap=f"{area_id}-ap{k + 1}",
                            building=b.id,
                            floor=floor_id,
                            area=area_id,
                            area_kind=b.kind,
                            x=float(10 * a + 4 * k + 2),
                            y=float(6 * f + 3),
                        )
                    )
    return Topology(infos, config.timezone)


@dataclass
class Agent:
    idx: int
    role: Role
    mac: str
    home_building: str
    home_area: str
    plan: list[str] = field(default_factory=list)  # areas cycled during the day
    lunch_area: str | None = None
    team: int = 0
    active_days: set = field(default_factory=set)  # visitors only
    device: str = ""  # hex digest, filled once the salt is known


@dataclass
class Visit:
    agent: int
    area: str
    ap: str
    loc0: int  # local seconds, inclusive
    loc1: int  # local seconds, exclusive


@dataclass
class GroundTruth:
    """Schedule-derived reference figures, computed without the pipeline."""

    occupancy_hour: dict[str, dict] = field(default_factory=dict)  # granularity -> {(unit, bucket): n}
    occupancy_day_building: dict = field(default_factory=dict)  # {(building, day): n}
    transitions_building: dict = field(default_factory=dict)  # {phase: {(from, to): n}}
    unique_places_area: dict = field(default_factory=dict)  # {phase: {device: n}}
    roles: dict = field(default_factory=dict)  # {device: role str}


@dataclass
class Generated:
    config: ScenarioConfig
    topology: Topology
    phases: PhaseConfig
    day_files: dict[str, list[str]]  # file name -> lines
    truth_sessions: list  # (device_hex, ap, start_ts, end_ts)
    truth: GroundTruth
    dropped_devices: set
    n_events: int

    def all_lines(self):
        for name in sorted(self.day_files):
            yield from self.day_files[name]


# ---------------------------------------------------------------------------


def _day_number(d: dt.date) -> int:
    return d.toordinal() - EPOCH_ORDINAL


def _loc_to_ts(loc: int, tz) -> int:
    """Independent local->epoch conversion via datetime (fold=0: first
    occurrence of ambiguous wall-clock times)."""
    naive = _EPOCH_NAIVE + dt.timedelta(seconds=int(loc))
    return int(naive.replace(tzinfo=tz).timestamp())


def _truth_hour_bucket(ts: int, tz) -> int:
    d = dt.datetime.fromtimestamp(ts, tz)
    return (d.date().toordinal() - EPOCH_ORDINAL) * 24 + d.hour


def _truth_day(ts: int, tz) -> int:
    return dt.datetime.fromtimestamp(ts, tz).date().toordinal() - EPOCH_ORDINAL


def _iter_hour_buckets(ts0: int, ts1: int, tz):
    """Wall-clock hour buckets overlapped by [ts0, ts1), stepping through
    real time so DST folds and gaps resolve pointwise."""
    t = ts0
    seen = set()
    while t < ts1:
        d = dt.datetime.fromtimestamp(t, tz)
        b = (d.date().toordinal() - EPOCH_ORDINAL) * 24 + d.hour
        if b not in seen:
            seen.add(b)
            yield b
        t += 3600 - (d.minute * 60 + d.second)
    b = _truth_hour_bucket(ts1 - 1, tz)
    if b not in seen:
        yield b


def _pick_weights(rng, n: int) -> np.ndarray:
    w = rng.uniform(0.6, 1.4, n)
    return w / w.sum()


class _Generator:
    def __init__(self, config: ScenarioConfig, salt: bytes):
        config.validate()
        self.config = config
        self.salt = salt
        self.tz = ZoneInfo(config.timezone)
        self.topology = build_topology(config)
        self.rng = np.random.default_rng(config.seed)
        self.areas_by_building: dict[str, list[str]] = {}
        self.aps_by_area: dict[str, list[str]] = {}
        self.kind_of_building: dict[str, AreaKind] = {b.id: b.kind for b in config.buildings}
        for info in self.topology.aps.values():
            self.areas_by_building.setdefault(info.building, [])
            if info.area not in self.areas_by_building[info.building]:
                self.areas_by_building[info.building].append(info.area)
            self.aps_by_area.setdefault(info.area, []).append(info.ap)
        self.phases = PhaseConfig(
            [Phase(p.name, p.start, p.end, p.description) for p in config.phases]
        )
        self.visits: list[Visit] = []
        self.agents: list[Agent] = []

    # -- population ------------------------------------------------------

    def _buildings_of_kind(self, *kinds) -> list[str]:
        out = [b.id for b in self.config.buildings if b.kind in kinds]
        return out or [self.config.buildings[0].id]

    def _span_days(self) -> list[int]:
        days = []
        for p in self.config.phases:
            d0 = _day_number(p.start)
            days.extend(range(d0, d0 + p.days))
        return days

    def make_agents(self) -> None:
        rng = self.rng
        academic = self._buildings_of_kind(AreaKind.ACADEMIC)
        dorms = self._buildings_of_kind(AreaKind.DORM)
        libraries = [b.id for b in self.config.buildings if b.kind == AreaKind.LIBRARY]
        dining = [b.id for b in self.config.buildings if b.kind == AreaKind.DINING]
        span = self._span_days()
        idx = 0
        team_counter: dict[tuple[str, str], int] = {}

        def new_agent(role: Role, home_b: str) -> Agent:
            nonlocal idx
            mac = "02:00:%02X:%02X:%02X:%02X" % (
                (idx >> 24) & 255, (idx >> 16) & 255, (idx >> 8) & 255, idx & 255,
            )
            areas = self.areas_by_building[home_b]
            home_area = areas[idx % len(areas)]
            key = (role.value, home_b)
            team = team_counter.get(key, 0)
            team_counter[key] = team ^ 1
            a = Agent(idx, role, mac, home_b, home_area, team=team)
            a.device = anonymize(mac, self.salt)
            idx += 1
            return a

        def day_plan(a: Agent, n_home: int) -> list[str]:
            areas = self.areas_by_building[a.home_building]
            plan = [a.home_area]
            pool = [x for x in areas if x != a.home_area]
            take = min(n_home - 1, len(pool))
            if take > 0:
                plan.extend(rng.choice(pool, size=take, replace=False).tolist())
            if a.role == Role.STUDENT and libraries:
                lib_areas = self.areas_by_building[libraries[a.idx % len(libraries)]]
                plan.insert(1, lib_areas[a.idx % len(lib_areas)])
            return plan

        pop = self.config.population
        for _ in range(pop.staff):
            b = academic[idx % len(academic)]
            a = new_agent(Role.STAFF, b)
            a.plan = day_plan(a, 2)
            self.agents.append(a)
        if self.config.student_cohorts:
            for b in sorted(self.config.student_cohorts):
                for _ in range(self.config.student_cohorts[b]):
                    a = new_agent(Role.STUDENT, b)
                    a.plan = day_plan(a, 2)
                    self.agents.append(a)
        else:
            for _ in range(pop.student):
                b = academic[idx % len(academic)]
                a = new_agent(Role.STUDENT, b)
                a.plan = day_plan(a, 2)
                self.agents.append(a)
        for _ in range(pop.dorm_resident):
            b = dorms[idx % len(dorms)]
            a = new_agent(Role.DORM_RESIDENT, b)
            trip_pool = [
                area
                for bid in self._buildings_of_kind(
                    AreaKind.RECREATION, AreaKind.DINING, AreaKind.TRANSIT
                )
                if self.kind_of_building.get(bid) != AreaKind.DORM
                for area in self.areas_by_building[bid]
            ]
            if trip_pool:
                take = min(2, len(trip_pool))
                a.plan = rng.choice(trip_pool, size=take, replace=False).tolist()
            self.agents.append(a)
        for _ in range(pop.visitor):
            b = academic[idx % len(academic)]
            a = new_agent(Role.VISITOR, b)
            a.plan = day_plan(a, 2)
            n_days = int(rng.integers(1, 4))
            a.active_days = set(
                rng.choice(np.array(span), size=min(n_days, len(span)), replace=False).tolist()
            )
            self.agents.append(a)
        for _ in range(pop.anonymous):
            b = academic[idx % len(academic)]
            a = new_agent(Role.ANONYMOUS, b)
            a.plan = day_plan(a, 2)
            self.agents.append(a)

        for a in self.agents:
            if dining:
                d_areas = self.areas_by_building[dining[a.idx % len(dining)]]
                a.lunch_area = d_areas[a.idx % len(d_areas)]

    # -- presence & schedules ---------------------------------------------

    def _present(self, phase: PhaseSpec, day: int, day_in_phase: int) -> list[Agent]:
        rng = self.rng
        present: list[Agent] = []
        groups: dict[tuple[str, str], list[Agent]] = {}
        for a in self.agents:
            if a.role == Role.DORM_RESIDENT:
                present.append(a)
            elif a.role == Role.VISITOR:
                if day in a.active_days:
                    present.append(a)
            else:
                groups.setdefault((a.role.value, a.home_building), []).append(a)
        for key in sorted(groups):
            group = groups[key]
            if phase.split_team:
                parity = (day_in_phase // 7) % 2
                present.extend(a for a in group if a.team == parity)
            elif phase.occupancy_scale >= 1.0:
                present.extend(group)
            else:
                k = int(round(phase.occupancy_scale * len(group)))
                if k > 0:
                    chosen = rng.permutation(len(group))[:k]
                    present.extend(group[i] for i in sorted(chosen.tolist()))
        return present

    def _phase_plan(self, agent: Agent, phase: PhaseSpec, cohort_size: int) -> list[str]:
        """The areas this agent cycles through during the phase."""
        if phase.places_ramp is None or agent.role != Role.DORM_RESIDENT:
            return agent.plan
        qs = [q for q, _ in phase.places_ramp]
        vs = [v for _, v in phase.places_ramp]
        u = (agent.idx + 0.5) / max(cohort_size, 1)
        k = int(round(float(np.interp(u, qs, vs))))
        pool = [
            area
            for bid, areas in sorted(self.areas_by_building.items())
            for area in areas
            if area != agent.home_area
        ]
        want = max(1, min(k - 1, len(pool)))
        # deterministic per (agent, phase): rotate the pool by agent index
        start = (agent.idx * 7) % len(pool)
        rotated = pool[start:] + pool[:start]
        return rotated[:want]

    def _pick_ap(self, area: str) -> str:
        aps = self.aps_by_area[area]
        if len(aps) == 1:
            return aps[0]
        return aps[int(self.rng.integers(0, len(aps)))]

    def _add_visit(self, agent: Agent, area: str, loc0: int, loc1: int) -> None:
        if loc1 > loc0:
            self.visits.append(Visit(agent.idx, area, self._pick_ap(area), loc0, loc1))

    def _schedule_day_worker(self, agent: Agent, day: int, phase: PhaseSpec, plan: list[str]) -> None:
        """Office-hours itinerary: cycle the plan, optional lunch excursion."""
        rng = self.rng
        h0, h1 = _ROLE_WINDOW[agent.role]
        start = day * 86400 + int(h0 * 3600) + int(rng.integers(-900, 900))
        end = day * 86400 + int(h1 * 3600) + int(rng.integers(-900, 900))
        lunch = phase.lunch_building is not None and agent.lunch_area is not None
        if not lunch:
            places = plan or [agent.home_area]
            w = _pick_weights(rng, len(places))
            t = start
            for area, frac in zip(places, w):
                t2 = min(end, t + int(frac * (end - start)))
                self._add_visit(agent, area, t, max(t2, t + _MIN_VISIT))
                t = max(t2, t + _MIN_VISIT)
            return
        noon = day * 86400 + 12 * 3600
        l0 = noon + 30 + int(rng.integers(0, 1200))  # arrive dining 12:00:30-12:20:30
        l1 = l0 + int(rng.integers(3900, 4800))  # 65-80 min: the return lands after 13:00
        places = plan or [agent.home_area]
        k_m = max(1, (len(places) + 1) // 2)
        morning, afternoon = places[:k_m], places[k_m:] or [places[0]]
        for seg_places, s, e in ((morning, start, l0), (afternoon, l1, end)):
            if e <= s:
                continue
            w = _pick_weights(rng, len(seg_places))
            t = s
            for area, frac in zip(seg_places, w):
                t2 = min(e, t + int(frac * (e - s)))
                self._add_visit(agent, area, t, max(t2, t + _MIN_VISIT))
                t = max(t2, t + _MIN_VISIT)
        self._add_visit(agent, agent.lunch_area, l0, l1)

    def _schedule_day_resident(
        self,
        agent: Agent,
        day: int,
        phase: PhaseSpec,
        plan: list[str],
        first_day: bool,
        last_day: bool,
        cursor: dict,
        spike_members: set,
    ) -> None:
        rng = self.rng
        if first_day:
            self._add_visit(agent, agent.home_area, day * 86400, day * 86400 + 30600 + int(rng.integers(0, 900)))
        # daytime trips cycle the phase plan
        if plan:
            n_tr = min(len(plan), 2) if phase.places_ramp is None else max(
                1, -(-len(plan) // phase.days)
            )
            t = day * 86400 + 36000 + int(rng.integers(0, 1800))
            for _ in range(n_tr):
                i = cursor.get(agent.idx, 0)
                area = plan[i % len(plan)]
                cursor[agent.idx] = i + 1
                dur = int(rng.integers(2400, 5400))
                self._add_visit(agent, area, t, t + dur)
                t += dur
        # evening anchor, through to the next morning
        ev0 = day * 86400 + 64800 - int(rng.integers(0, 900))
        ev1 = day * 86400 + 86400 if last_day else (day + 1) * 86400 + 30600 + int(rng.integers(0, 900))
        spike = phase.spike
        if spike is not None and agent.idx in spike_members:
            s0 = day * 86400 + spike.hour * 3600 + 300 + int(rng.integers(0, 120))
            s1 = day * 86400 + spike.hour * 3600 + 3000
            self._add_visit(agent, agent.home_area, ev0, s0)
            self._add_visit(agent, spike.area, s0, s1)
            self._add_visit(agent, agent.home_area, s1, ev1)
        else:
            self._add_visit(agent, agent.home_area, ev0, ev1)

    def schedule(self) -> None:
        for phase in self.config.phases:
            d0 = _day_number(phase.start)
            residents = [a for a in self.agents if a.role == Role.DORM_RESIDENT]
            plans = {
                a.idx: self._phase_plan(a, phase, len(residents) or len(self.agents))
                for a in self.agents
            }
            cursor: dict[int, int] = {}
            for di in range(phase.days):
                day = d0 + di
                spike_members: set = set()
                if phase.spike is not None and di == phase.spike.day:
                    pool = [
                        a.idx
                        for a in residents
                        if a.home_area != phase.spike.area
                    ]
                    spike_members = set(pool[: phase.spike.count])
                for agent in self._present(phase, day, di):
                    if agent.role == Role.DORM_RESIDENT:
                        self._schedule_day_resident(
                            agent, day, phase, plans[agent.idx],
                            first_day=(di == 0), last_day=(di == phase.days - 1),
                            cursor=cursor, spike_members=spike_members,
                        )
                    else:
                        self._schedule_day_worker(agent, day, phase, plans[agent.idx])

    # -- emission ----------------------------------------------------------

    def emit_lines(self):
        """Events for every visit, in (local time, sequence) order, plus the
        device set; the loss model is applied afterwards."""
        rng = self.rng
        records = []  # (loc, seq, agent_idx, subtype, ap, extra_body)
        seq = 0
        last_day_seen: dict[int, int] = {}
        by_agent: dict[int, list[Visit]] = {}
        for v in self.visits:
            by_agent.setdefault(v.agent, []).append(v)
        for a_idx in sorted(by_agent):
            agent = self.agents[a_idx]
            vs = sorted(by_agent[a_idx], key=lambda v: v.loc0)
            prev_end = None
            for v in vs:
                day = v.loc0 // 86400
                open_token = "association"
                if prev_end == v.loc0 and rng.random() < 0.6:
                    open_token = "reassociation"
                if agent.role != Role.ANONYMOUS and last_day_seen.get(a_idx) != day:
                    last_day_seen[a_idx] = day
                    login = "staff" if agent.role == Role.STAFF else "student"
                    records.append((v.loc0, seq, a_idx, "authentication", v.ap, f"login={login} "))
                    seq += 1
                records.append((v.loc0, seq, a_idx, open_token, v.ap, ""))
                seq += 1
                t = v.loc0 + int(rng.integers(1500, 2400))
                while t < v.loc1 - 600:
                    records.append((t, seq, a_idx, "drift", v.ap, ""))
                    seq += 1
                    t += int(rng.integers(1500, 2400))
                close_token = "deauthentication" if rng.random() < 0.1 else "disassociation"
                records.append((v.loc1, seq, a_idx, close_token, v.ap, ""))
                seq += 1
                prev_end = v.loc1
        records.sort(key=lambda r: (r[0], r[1]))
        return records

    def apply_loss_and_render(self, records):
        rng = np.random.default_rng(self.config.seed ^ 0x5EED)
        loss = self.config.loss
        n = len(records)
        keep = np.ones(n, dtype=bool)
        if loss.drop_rate > 0:
            keep = rng.random(n) >= loss.drop_rate
        dropped_devices = {self.agents[records[i][2]].device for i in np.flatnonzero(~keep)}
        kept = [records[i] for i in np.flatnonzero(keep)]
        if loss.duplicate_rate > 0:
            dup = rng.random(len(kept)) < loss.duplicate_rate
            out = []
            for r, d in zip(kept, dup):
                out.append(r)
                if d:
                    out.append(r)
            kept = out
        if loss.jitter_s > 0 and kept:
            keys = np.array([r[0] for r in kept], dtype=np.float64)
            keys = keys + rng.uniform(-loss.jitter_s, loss.jitter_s, len(kept))
            order = np.argsort(keys, kind="stable")
            kept = [kept[i] for i in order]

        day_files: dict[str, list[str]] = {}
        controllers = {info.ap: f"ctrl-{info.building}" for info in self.topology.aps.values()}
        pids = {
            b.id: f"wlms[{301 + i}]" for i, b in enumerate(self.config.buildings)
        }
        building_of_ap = {info.ap: info.building for info in self.topology.aps.values()}
        for loc, _seq, a_idx, token, ap, extra in kept:
            day, tod = divmod(loc, 86400)
            h, rem = divmod(tod, 3600)
            m, s = divmod(rem, 60)
            agent = self.agents[a_idx]
            line = (
                f"{h:02d}:{m:02d}:{s:02d} {controllers[ap]} {pids[building_of_ap[ap]]} "
                f"{token} {agent.mac} {extra}AP={ap}"
            )
            date = (dt.date(1970, 1, 1) + dt.timedelta(days=int(day))).isoformat()
            day_files.setdefault(f"ap-syslog-{date}.log", []).append(line)
        return day_files, dropped_devices, len(kept)

    # -- ground truth --------------------------------------------------------

    def compute_truth(self, granularities=("Area", "Building")) -> GroundTruth:
        tz = self.tz
        truth = GroundTruth()
        truth.roles = {a.device: a.role.value for a in self.agents}
        sets: dict[str, dict] = {g: {} for g in granularities}
        day_sets: dict = {}
        info_of_area = {}
        for info in self.topology.aps.values():
            info_of_area[info.area] = info
        visits_ts = []  # (agent, area, building, ts0, ts1, ap)
        for v in self.visits:
            ts0 = _loc_to_ts(v.loc0, tz)
            ts1 = _loc_to_ts(v.loc1, tz)
            info = self.topology.aps[v.ap]
            visits_ts.append((v.agent, v.area, info.building, ts0, ts1, v.ap))
            dev = self.agents[v.agent].device
            for b in _iter_hour_buckets(ts0, ts1, tz):
                for g in granularities:
                    unit = {"AP": v.ap, "Area": v.area, "Building": info.building}[g]
                    sets[g].setdefault((unit, b), set()).add(dev)
            d0, d1 = _truth_day(ts0, tz), _truth_day(ts1 - 1, tz)
            for d in range(d0, d1 + 1):
                day_sets.setdefault((info.building, d), set()).add(dev)
        for g in granularities:
            truth.occupancy_hour[g] = {k: len(s) for k, s in sets[g].items()}
        truth.occupancy_day_building = {k: len(s) for k, s in day_sets.items()}

        # transitions (building scope) and unique places (area) per phase
        by_agent: dict[int, list] = {}
        for row in visits_ts:
            by_agent.setdefault(row[0], []).append(row)
        phase_windows = {}
        for p in self.config.phases:
            w0 = _loc_to_ts(_day_number(p.start) * 86400, tz)
            w1 = _loc_to_ts((_day_number(p.start) + p.days) * 86400, tz)
            phase_windows[p.name] = (w0, w1)
            truth.transitions_building[p.name] = {}
            truth.unique_places_area[p.name] = {}
        for a_idx, rows in by_agent.items():
            rows.sort(key=lambda r: r[3])
            dev = self.agents[a_idx].device
            for scope_i, scope_key in ((2, "building"), (1, "area")):
                merged = []
                for row in rows:
                    unit, ts0, ts1 = row[scope_i], row[3], row[4]
                    if merged and merged[-1][0] == unit:
                        merged[-1][2] = ts1
                    else:
                        merged.append([unit, ts0, ts1])
                qualified = [m for m in merged if m[2] - m[1] >= 180]
                if scope_key == "building":
                    for prev, cur in zip(qualified, qualified[1:]):
                        if prev[0] == cur[0]:
                            continue
                        for pname, (w0, w1) in phase_windows.items():
                            if w0 <= cur[1] < w1:
                                key = (prev[0], cur[0])
                                mat = truth.transitions_building[pname]
                                mat[key] = mat.get(key, 0) + 1
                else:
                    for pname, (w0, w1) in phase_windows.items():
                        places = {m[0] for m in qualified if w0 <= m[1] < w1}
                        if places:
                            truth.unique_places_area[pname][dev] = len(places)
        truth_sessions = [
            (self.agents[a].device, ap, ts0, ts1) for a, _ar, _b, ts0, ts1, ap in visits_ts
        ]
        truth_sessions.sort(key=lambda r: (r[0], r[2], r[3], r[1]))
        return truth, truth_sessions


def generate(config: ScenarioConfig, salt: bytes, with_truth: bool = True,
             truth_granularities=("Area", "Building")) -> Generated:
    """Run the generator; deterministic under (seed, salt)."""
    gen = _Generator(config, salt)
    gen.make_agents()
    gen.schedule()
    records = gen.emit_lines()
    day_files, dropped, n_events = gen.apply_loss_and_render(records)
    if with_truth:
        truth, truth_sessions = gen.compute_truth(truth_granularities)
    else:
        truth, truth_sessions = GroundTruth(), []
        truth.roles = {a.device: a.role.value for a in gen.agents}
    return Generated(
        config=config,
        topology=gen.topology,
        phases=gen.phases,
        day_files=day_files,
        truth_sessions=truth_sessions,
        truth=truth,
        dropped_devices=dropped,
        n_events=n_events,
    )


def write_outputs(gen: Generated, outdir, include_truth: bool = True) -> None:
    from . import reports

    outdir = Path(outdir)
    (outdir / "logs").mkdir(parents=True, exist_ok=True)
    reports.write_json(outdir / "topology.json", gen.topology.to_doc())
    reports.write_json(outdir / "phases.json", gen.phases.to_doc())
    if gen.config.thresholds is not None:
        reports.write_json(outdir / "thresholds.json", gen.config.thresholds)
    reports.write_json(
        outdir / "manifest.json",
        {
            "schema": "wifisense.manifest/1",
            "scenario": gen.config.to_doc(),
            "events": gen.n_events,
            "devices": len({a for a, *_ in gen.truth_sessions}) if gen.truth_sessions else None,
            "files": sorted(gen.day_files),
        },
    )
    for name in sorted(gen.day_files):
        reports.atomic_write_text(outdir / "logs" / name, "\n".join(gen.day_files[name]) + "\n")
    if not include_truth:
        return
    truth_dir = outdir / "truth"
    truth_dir.mkdir(exist_ok=True)
    loc = gen.topology.localizer
    from .model import Granularity, OccupancySeries, TransitionMatrix

    for g, counts in gen.truth.occupancy_hour.items():
        series = OccupancySeries(Granularity(g), "hour", dict(counts), gen.topology.timezone)
        reports.write_json(
            truth_dir / f"occupancy_{g.lower()}.json", reports.occupancy_doc(series, loc)
        )
    daily = OccupancySeries(
        Granularity.BUILDING, "day", dict(gen.truth.occupancy_day_building), gen.topology.timezone
    )
    reports.write_json(truth_dir / "occupancy_building_daily.json", reports.occupancy_doc(daily, loc))
    for pname, counts in gen.truth.transitions_building.items():
        m = TransitionMatrix(Granularity.BUILDING, None, dict(counts))
        reports.write_json(truth_dir / f"transitions_{pname}.json", reports.transitions_doc(m, loc))
    reports.write_json(
        truth_dir / "unique_places.json",
        {"schema": "wifisense.unique_places/1", "granularity": "Area",
         "phases": {p: dict(sorted(v.items())) for p, v in gen.truth.unique_places_area.items()}},
    )
    with open(truth_dir / "profiles.csv", "w", encoding="utf-8") as f:
        f.write("device,role\n")
        for dev, role in sorted(gen.truth.roles.items()):
            f.write(f"{dev},{role}\n")
    with open(truth_dir / "sessions.csv", "w", encoding="utf-8") as f:
        f.write("device,ap,start,end\n")
        for dev, ap, ts0, ts1 in gen.truth_sessions:
            f.write(f"{dev},{ap},{ts0},{ts1}\n")


# -- presets ----------------------------------------------------------------


def _sg_campus(extra_dorm: bool = False) -> list[BuildingSpec]:
    out = [BuildingSpec(f"b{i}", AreaKind.ACADEMIC, floors=2, areas_per_floor=2, aps_per_area=2)
           for i in range(1, 6)]
    out.append(BuildingSpec("b6", AreaKind.LIBRARY, floors=1, areas_per_floor=2, aps_per_area=2))
    out.append(BuildingSpec("b7", AreaKind.DINING, floors=1, areas_per_floor=2, aps_per_area=2))
    if extra_dorm:
        out.append(BuildingSpec("d1", AreaKind.DORM, floors=2, areas_per_floor=2, aps_per_area=2))
    return out


def preset_lockdown(scale: float = 0.08, seed: int = 20_200_403) -> ScenarioConfig:
    """Work-from-home shutdown: baseline phase, then occupancy scaled down."""
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=_sg_campus(),
        population=PopulationSpec(staff=80, student=240),
        phases=[
            PhaseSpec("P0", dt.date(2020, 2, 3), 10, 1.0, lunch_building="b7",
                      description="business as usual"),
            PhaseSpec("P1", dt.date(2020, 4, 6), 10, scale, lunch_building="b7",
                      description="stay-home orders"),
        ],
        name=f"lockdown-{int(round(scale * 100))}",
    )


def preset_sg_split_team(seed: int = 20_200_322) -> ScenarioConfig:
    """A/B alternation: half the population on-site each week."""
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=_sg_campus(),
        population=PopulationSpec(staff=80, student=240),
        phases=[
            PhaseSpec("P0", dt.date(2020, 2, 3), 14, 1.0, lunch_building="b7",
                      description="business as usual"),
            PhaseSpec("P2", dt.date(2020, 3, 23), 14, 1.0, split_team=True, lunch_building="b7",
                      description="A/B split teams, alternating weeks"),
        ],
        name="sg-split-team",
    )


def preset_dorm_steady(seed: int = 20_200_407) -> ScenarioConfig:
    """Residence hall population that never leaves across phases."""
    buildings = [
        BuildingSpec("d1", AreaKind.DORM, floors=4, areas_per_floor=1, aps_per_area=2),
        BuildingSpec("r1", AreaKind.RECREATION, floors=1, areas_per_floor=2, aps_per_area=2),
        BuildingSpec("f1", AreaKind.DINING, floors=1, areas_per_floor=2, aps_per_area=2),
    ]
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=buildings,
        population=PopulationSpec(dorm_resident=700),
        phases=[
            PhaseSpec("P0", dt.date(2020, 2, 3), 7, description="pre-restrictions"),
            PhaseSpec("P2", dt.date(2020, 3, 23), 7, description="split teams elsewhere"),
            PhaseSpec("P4", dt.date(2020, 4, 7), 7, description="full lockdown"),
        ],
        name="dorm-steady-700",
    )


def preset_us_two_phase(seed: int = 20_200_320) -> ScenarioConfig:
    """Business-as-usual versus stay-home: mobility CDF shifts left."""
    buildings = [BuildingSpec(f"u{i}", AreaKind.ACADEMIC, floors=1, areas_per_floor=3,
                              aps_per_area=1) for i in range(1, 9)]
    buildings.append(BuildingSpec("ud", AreaKind.DORM, floors=1, areas_per_floor=1, aps_per_area=2))
    return ScenarioConfig(
        seed=seed,
        timezone="America/New_York",
        buildings=buildings,
        population=PopulationSpec(dorm_resident=200),
        phases=[
            PhaseSpec("PU0", dt.date(2020, 2, 29), 14,
                      places_ramp=[(0.0, 4), (0.5, 10), (0.9, 17), (1.0, 21)],
                      description="business as usual"),
            PhaseSpec("PU1", dt.date(2020, 3, 20), 14,
                      places_ramp=[(0.0, 2), (0.5, 5), (0.9, 9), (1.0, 11)],
                      description="state-wide stay-at-home"),
        ],
        name="us-two-phase",
    )


LUNCH_COHORTS = {"b1": 180, "b2": 259, "b3": 140, "b4": 120, "b5": 100, "b6": 80}


def preset_lunch_rush(seed: int = 20_200_113) -> ScenarioConfig:
    """One school day with the noon surge into the dining building.

    Students stay inside their origin building until the lunch excursion,
    so each origin's inbound transition count equals its cohort size and
    the cohort map pins the dominant chord.
    """
    buildings = [
        BuildingSpec(f"b{i}", AreaKind.ACADEMIC, floors=2, areas_per_floor=2, aps_per_area=2)
        for i in range(1, 7)
    ]
    buildings.append(BuildingSpec("b7", AreaKind.DINING, floors=1, areas_per_floor=2, aps_per_area=2))
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=buildings,
        population=PopulationSpec(student=sum(LUNCH_COHORTS.values())),
        phases=[PhaseSpec("DAY", dt.date(2020, 1, 13), 1, 1.0, lunch_building="b7",
                          description="regular school day")],
        name="lunch-rush",
        thresholds={"schema": "wifisense.thresholds/1", "area_kinds": {"Dining": 220}, "units": {}},
        student_cohorts=dict(LUNCH_COHORTS),
    )


def preset_dorm_violation(seed: int = 20_200_214) -> ScenarioConfig:
    """Five dorm blocks; one evening surge pushes one block past threshold."""
    buildings = [BuildingSpec("d1", AreaKind.DORM, floors=1, areas_per_floor=5, aps_per_area=1)]
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=buildings,
        population=PopulationSpec(dorm_resident=450),
        phases=[
            PhaseSpec(
                "WATCH", dt.date(2020, 2, 10), 3,
                spike=SpikeSpec(area="d1-f1-a1", day=1, hour=20, count=30),
                description="routine monitoring with one seeded violation",
            )
        ],
        name="dorm-violation",
        thresholds={"schema": "wifisense.thresholds/1", "area_kinds": {"Dorm": 100}, "units": {}},
    )


def preset_bench(agents: int = 2500, days: int = 20, seed: int = 1_000_000) -> ScenarioConfig:
    staff = agents // 12
    return ScenarioConfig(
        seed=seed,
        timezone="Asia/Singapore",
        buildings=[
            BuildingSpec(f"b{i}", AreaKind.ACADEMIC, floors=3, areas_per_floor=2, aps_per_area=2)
            for i in range(1, 7)
        ]
        + [BuildingSpec("b7", AreaKind.DINING, floors=2, areas_per_floor=2, aps_per_area=2)],
        population=PopulationSpec(staff=staff, student=agents - staff),
        phases=[PhaseSpec("P0", dt.date(2020, 2, 3), days, 1.0, lunch_building="b7")],
        loss=LossModel(drop_rate=0.005, duplicate_rate=0.01, jitter_s=20),
        name="bench-1m",
    )


PRESETS = {
    "lockdown": preset_lockdown,
    "sg-split-team": preset_sg_split_team,
    "dorm-steady-700": preset_dorm_steady,
    "us-two-phase": preset_us_two_phase,
    "lunch-rush": preset_lunch_rush,
    "dorm-violation": preset_dorm_violation,
    "bench-1m": preset_bench,
}


def preset(name: str, **kwargs) -> ScenarioConfig:
    try:
        fn = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    return fn(**kwargs)
