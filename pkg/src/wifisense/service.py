"""Read-only HTTP API projecting the session store for the dashboard.

A refresher thread rebuilds an immutable snapshot from the store files on
an interval and swaps it atomically; request handlers only ever read the
current snapshot, so there are no locks on the hot path. Thresholds are
part of the snapshot and therefore hot-reload with it.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from . import analytics, reports
from .errors import EmptyTopologyUnit, MissingPositions, SchemaError
from .model import MAC_RE, Granularity
from .profiler import load_profiles
from .sessions import SessionSet
from .topology import Topology, load_topology

API_PREFIX = "/v1"


@dataclass
class ServiceConfig:
    topology_path: str
    sessions_path: str
    thresholds_path: str | None = None
    profiles_path: str | None = None
    token: str | None = None  # bearer token guarding the occupants listing
    refresh_interval: float = 60.0


@dataclass
class ThresholdPolicy:
    """Max allowed occupancy per unit or per area kind; unit-specific
    entries override kind-level ones. Fractional thresholds resolve
    against a declared capacity."""

    units: dict[str, int] = field(default_factory=dict)
    area_kinds: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_doc(cls, doc: dict) -> "ThresholdPolicy":
        units: dict[str, int] = {}
        for unit, spec in (doc.get("units") or {}).items():
            units[unit] = _resolve_threshold_spec(unit, spec)
        kinds: dict[str, int] = {}
        for kind, spec in (doc.get("area_kinds") or {}).items():
            kinds[kind] = _resolve_threshold_spec(kind, spec)
        return cls(units, kinds)

    def threshold_for(self, topology: Topology, granularity: Granularity, unit: str) -> int | None:
        if unit in self.units:
            return self.units[unit]
        kind = topology.kind_of_unit(granularity, unit)
        if kind is not None and kind.value in self.area_kinds:
            return self.area_kinds[kind.value]
        return None


def _resolve_threshold_spec(name: str, spec) -> int:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = int(spec)
    elif isinstance(spec, dict) and "max" in spec:
        value = int(spec["max"])
    elif isinstance(spec, dict) and "fraction" in spec and "capacity" in spec:
        value = int(spec["fraction"] * spec["capacity"])
    else:
        raise SchemaError(f"threshold for {name!r} must be a count or fraction+capacity")
    if value <= 0:
        raise SchemaError(f"threshold for {name!r} must be positive")
    return value


@dataclass
class Snapshot:
    topology: Topology
    sessions: SessionSet
    thresholds: ThresholdPolicy
    profiles: dict | None
    built_at: float
    mtimes: tuple


class SnapshotHolder:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self._snapshot: Snapshot | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def _stat_mtimes(self) -> tuple:
        paths = [self.config.topology_path, self.config.sessions_path]
        if self.config.thresholds_path:
            paths.append(self.config.thresholds_path)
        if self.config.profiles_path:
            paths.append(self.config.profiles_path)
        out = []
        for p in paths:
            try:
                out.append(os.stat(p).st_mtime_ns)
            except OSError:
                out.append(None)
        return tuple(out)

    def refresh(self, force: bool = False) -> Snapshot:
        mtimes = self._stat_mtimes()
        snap = self._snapshot
        if snap is not None and not force and mtimes == snap.mtimes:
            return snap
        topology = load_topology(Path(self.config.topology_path))
        sessions = SessionSet.load(self.config.sessions_path, topology)
        thresholds = ThresholdPolicy()
        if self.config.thresholds_path and os.path.exists(self.config.thresholds_path):
            thresholds = ThresholdPolicy.from_doc(reports.read_json(self.config.thresholds_path))
        profiles = None
        if self.config.profiles_path and os.path.exists(self.config.profiles_path):
            profiles = load_profiles(self.config.profiles_path)
        import time

        snap = Snapshot(topology, sessions, thresholds, profiles, time.time(), mtimes)
        self._snapshot = snap
        return snap

    def current(self) -> Snapshot:
        if self._snapshot is None:
            return self.refresh()
        return self._snapshot

    def start(self) -> None:
        if self.config.refresh_interval and self.config.refresh_interval > 0:
            self._thread = threading.Thread(target=self._loop, daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def _loop(self) -> None:
        while not self._stop.wait(self.config.refresh_interval):
            try:
                self.refresh()
            except Exception:
                pass  # keep serving the previous snapshot


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _parse_instant(snap: Snapshot, text: str, what: str) -> int:
    try:
        return snap.topology.localizer.parse_instant(text)
    except SchemaError as exc:
        raise _error(400, "bad_range", f"{what}: {exc}") from None


def build_app(config: ServiceConfig) -> FastAPI:
    from contextlib import asynccontextmanager

    holder = SnapshotHolder(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        holder.refresh()
        holder.start()
        yield
        holder.stop()

    app = FastAPI(title="wifisense occupancy service", version="1", lifespan=lifespan)
    app.state.holder = holder

    @app.exception_handler(HTTPException)
    async def _handler(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    def snap() -> Snapshot:
        return holder.current()

    @app.get(API_PREFIX + "/buildings")
    def buildings(s: Snapshot = Depends(snap)):
        return [
            {"id": b, "name": b, "floors": len(s.topology.floors_of(b))}
            for b in s.topology.buildings()
        ]

    @app.get(API_PREFIX + "/buildings/{building}/floors")
    def floors(building: str, s: Snapshot = Depends(snap)):
        try:
            names = s.topology.floors_of(building)
        except EmptyTopologyUnit:
            raise _error(404, "unknown_unit", f"unknown building {building!r}") from None
        return [{"id": f, "name": f, "building": building} for f in names]

    @app.get(API_PREFIX + "/floors/{floor}/aps")
    def floor_aps(floor: str, s: Snapshot = Depends(snap)):
        try:
            infos = s.topology.aps_of_floor(floor)
        except EmptyTopologyUnit:
            raise _error(404, "unknown_unit", f"unknown floor {floor!r}") from None
        return [
            {"id": i.ap, "area": i.area, "area_kind": i.area_kind.value, "x": i.x, "y": i.y}
            for i in infos
        ]

    @app.get(API_PREFIX + "/occupancy")
    def occupancy_endpoint(
        unit: str,
        granularity: str = "Area",
        bucket: str = "hour",
        request: Request = None,
        s: Snapshot = Depends(snap),
    ):
        gran = _granularity(granularity)
        if not s.topology.has_unit(gran, unit):
            raise _error(404, "unknown_unit", f"unknown {gran.value} unit {unit!r}")
        window = _window_from_query(s, request)
        series = analytics.occupancy(
            s.sessions, s.topology, gran, window=window, bucket=bucket, units=[unit]
        )
        threshold = s.thresholds.threshold_for(s.topology, gran, unit)
        loc = s.topology.localizer
        points = []
        for (u, b), count in sorted(series.counts.items()):
            normal = count if threshold is None else min(count, threshold)
            excess = 0 if threshold is None else max(0, count - threshold)
            points.append(
                {
                    "bucket": loc.hour_bucket_iso(b) if bucket == "hour" else loc.day_iso(b),
                    "count": count,
                    "normal": normal,
                    "target_excess": excess,
                }
            )
        return {
            "unit": unit,
            "granularity": gran.value,
            "bucket": bucket,
            "threshold": threshold,
            "points": points,
        }

    @app.get(API_PREFIX + "/heatmap")
    def heatmap(floor: str, bucket: str, s: Snapshot = Depends(snap)):
        loc = s.topology.localizer
        try:
            b = loc.parse_local(bucket) // 3600
        except SchemaError as exc:
            raise _error(400, "bad_range", str(exc)) from None
        try:
            series = analytics.occupancy(s.sessions, s.topology, Granularity.AP)
            cells = analytics.heatmap_grid(series, s.topology, floor, b)
        except EmptyTopologyUnit:
            raise _error(404, "unknown_unit", f"unknown floor {floor!r}") from None
        except MissingPositions as exc:
            raise _error(400, "missing_positions", str(exc)) from None
        for cell in cells:
            t = s.thresholds.threshold_for(s.topology, Granularity.AP, cell["ap"])
            cell["threshold"] = t
            cell["over"] = bool(t is not None and cell["count"] > t)
        return {"floor": floor, "bucket": bucket, "cells": cells}

    @app.get(API_PREFIX + "/transitions")
    def transitions_endpoint(
        scope: str = "Building", request: Request = None, s: Snapshot = Depends(snap)
    ):
        gran = _granularity(scope)
        window = _window_from_query(s, request)
        matrix = analytics.transition_matrix(s.sessions, s.topology, gran, window=window)
        return reports.transitions_doc(matrix, s.topology.localizer)

    @app.get(API_PREFIX + "/occupants")
    def occupants(ap: str, bucket: str, request: Request = None, s: Snapshot = Depends(snap)):
        # occupant listings never serve without a configured token tier
        if not config.token:
            raise _error(401, "unauthorized", "occupants listing requires a configured token")
        auth = request.headers.get("authorization", "") if request else ""
        if auth != f"Bearer {config.token}":
            raise _error(401, "unauthorized", "missing or invalid bearer token")
        if not s.topology.has_unit(Granularity.AP, ap):
            raise _error(404, "unknown_unit", f"unknown AP {ap!r}")
        loc = s.topology.localizer
        try:
            b = loc.parse_local(bucket) // 3600
        except SchemaError as exc:
            raise _error(400, "bad_range", str(exc)) from None
        series_devices = _devices_at(s, ap, b)
        return {"ap": ap, "bucket": bucket, "devices": series_devices}

    def _granularity(text: str) -> Granularity:
        try:
            return Granularity(text)
        except ValueError:
            raise _error(
                400, "bad_granularity", f"granularity must be one of AP/Area/Floor/Building"
            ) from None

    def _window_from_query(s: Snapshot, request: Request | None):
        if request is None:
            return None
        q = request.query_params
        frm, to = q.get("from"), q.get("to")
        if frm is None and to is None:
            return None
        if frm is None or to is None:
            raise _error(400, "bad_range", "provide both 'from' and 'to' or neither")
        lo = _parse_instant(s, frm, "from")
        hi = _parse_instant(s, to, "to")
        if hi <= lo:
            raise _error(400, "bad_range", "'to' must be after 'from'")
        return (lo, hi)

    def _devices_at(s: Snapshot, ap: str, bucket: int) -> list[str]:
        idx = s.topology.ap_index[ap]
        ss = s.sessions
        mask = ss.ap == idx
        if not mask.any():
            return []
        loc = s.topology.localizer
        out = set()
        for d, st, en in zip(
            ss.dev[mask].tolist(), ss.start[mask].tolist(), ss.end[mask].tolist()
        ):
            if int(loc.hour_bucket(st)) <= bucket <= int(loc.hour_bucket(en - 1)):
                out.add(ss.devices[d])
        assert all(MAC_RE.search(x) is None for x in out)
        return sorted(out)

    return app


def run(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8080) -> None:
    import uvicorn

    uvicorn.run(build_app(config), host=host, port=port, log_level="warning")
