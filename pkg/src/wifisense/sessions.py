"""Sessionization: normalized events -> non-overlapping AP sessions.

Partitioned by device and deterministic: simultaneous events are ordered
by subtype precedence (closes before opens), then AP id, then input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import MixedDevices, SchemaError, UnsortedInput
from .ingest import EventColumns
from .model import NormalizedEvent, Session, Trajectory, is_device_id
from .topology import Topology


@dataclass
class SessionPolicy:
    idle_timeout: int = 1800  # close an unterminated session this long after its last event
    min_session: int = 0  # sessions shorter than this are dropped; filtering is usually
    # an analytics concern, so the default keeps everything


@dataclass
class DedupePolicy:
    drop_static: bool = False
    static_min_hours: float = 72.0
    static_min_coverage: float = 0.9  # fraction of the span the device must be connected


@dataclass
class SessionSet:
    """Columnar session store: rows sorted by (device index, start)."""

    dev: np.ndarray  # int64 index into devices
    ap: np.ndarray  # int64 index into topology.ap_ids
    start: np.ndarray  # int64 epoch seconds
    end: np.ndarray  # int64 epoch seconds
    devices: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.dev)

    @classmethod
    def empty(cls) -> "SessionSet":
        z = np.empty(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy(), [])

    @classmethod
    def from_events(cls, events: EventColumns, policy: SessionPolicy | None = None) -> "SessionSet":
        policy = policy or SessionPolicy()
        n = len(events)
        if n == 0:
            return cls.empty()
        # sort by (device, ts, subtype precedence, ap); (ts, sub, ap) packs
        # into one int64 when the AP table is small enough, halving sort keys
        n_aps = int(events.ap.max()) + 1 if n else 0
        if n_aps <= (1 << 14) and events.ts.min() >= 0:
            combo = events.ts * (1 << 17) + events.sub * (1 << 14) + events.ap
            order = np.lexsort((combo, events.dev))
            combo = combo[order]
        else:
            order = np.lexsort((events.ap, events.sub, events.ts, events.dev))
            combo = None
        dev = events.dev[order]
        ts = events.ts[order]
        sub = events.sub[order]
        ap = events.ap[order]
        # exact duplicates (controller double-logging) collapse to one event
        if n > 1:
            keep = np.empty(n, dtype=bool)
            keep[0] = True
            if combo is not None:
                keep[1:] = (dev[1:] != dev[:-1]) | (combo[1:] != combo[:-1])
            else:
                keep[1:] = (
                    (dev[1:] != dev[:-1])
                    | (ts[1:] != ts[:-1])
                    | (sub[1:] != sub[:-1])
                    | (ap[1:] != ap[:-1])
                )
            if not keep.all():
                dev, ts, sub, ap = dev[keep], ts[keep], sub[keep], ap[keep]
        s_dev, s_ap, s_start, s_end = _kernels.sessionize_arrays(
            dev, ts, sub, ap, policy.idle_timeout, policy.min_session
        )
        return cls(s_dev, s_ap, s_start, s_end, list(events.devices))

    def device_of_row(self, i: int) -> str:
        return self.devices[int(self.dev[i])]

    def to_trajectories(self, topology: Topology) -> dict[str, Trajectory]:
        out: dict[str, Trajectory] = {}
        ap_ids = topology.ap_ids
        for i in range(len(self.dev)):
            hexid = self.devices[int(self.dev[i])]
            traj = out.get(hexid)
            if traj is None:
                traj = out[hexid] = Trajectory(hexid)
            traj.sessions.append(
                Session(hexid, ap_ids[int(self.ap[i])], int(self.start[i]), int(self.end[i]))
            )
        return out

    @classmethod
    def from_trajectories(cls, trajectories, topology: Topology) -> "SessionSet":
        devices: list[str] = []
        dev_idx: dict[str, int] = {}
        dev_l, ap_l, st_l, en_l = [], [], [], []
        for traj in trajectories:
            if traj.device not in dev_idx:
                dev_idx[traj.device] = len(devices)
                devices.append(traj.device)
            d = dev_idx[traj.device]
            for s in traj.sessions:
                dev_l.append(d)
                ap_l.append(topology.ap_index[s.ap])
                st_l.append(s.start)
                en_l.append(s.end)
        dev = np.array(dev_l, dtype=np.int64)
        ap = np.array(ap_l, dtype=np.int64)
        start = np.array(st_l, dtype=np.int64)
        end = np.array(en_l, dtype=np.int64)
        order = np.lexsort((start, dev))
        return cls(dev[order], ap[order], start[order], end[order], devices)

    # -- durable store -------------------------------------------------

    def save(self, path, topology: Topology) -> None:
        """Write the session store: CSV device,ap,start,end sorted by
        (device hex, start)."""
        hexes = np.array(self.devices, dtype=object)
        row_hex = hexes[self.dev] if len(self.dev) else hexes[:0]
        order = np.lexsort((self.start, row_hex)) if len(self.dev) else []
        ap_ids = topology.ap_ids
        with open(path, "w", encoding="utf-8") as f:
            f.write("device,ap,start,end\n")
            for i in order:
                f.write(
                    f"{row_hex[i]},{ap_ids[int(self.ap[i])]},{int(self.start[i])},{int(self.end[i])}\n"
                )

    @classmethod
    def load(cls, path, topology: Topology) -> "SessionSet":
        devices: list[str] = []
        dev_idx: dict[str, int] = {}
        ap_index = topology.ap_index
        dev_l, ap_l, st_l, en_l = [], [], [], []
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if header != "device,ap,start,end":
                raise SchemaError(f"unexpected session store header {header!r}")
            for lineno, line in enumerate(f, start=2):
                parts = line.rstrip("\n").split(",")
                if len(parts) != 4:
                    raise SchemaError(f"session store line {lineno}: expected 4 fields")
                hexid, ap, start, end = parts
                if not is_device_id(hexid):
                    raise SchemaError(f"session store line {lineno}: bad device id")
                a = ap_index.get(ap)
                if a is None:
                    raise SchemaError(f"session store line {lineno}: unknown AP {ap!r}")
                d = dev_idx.get(hexid)
                if d is None:
                    d = dev_idx[hexid] = len(devices)
                    devices.append(hexid)
                dev_l.append(d)
                ap_l.append(a)
                st_l.append(int(start))
                en_l.append(int(end))
        dev = np.array(dev_l, dtype=np.int64)
        ap = np.array(ap_l, dtype=np.int64)
        start = np.array(st_l, dtype=np.int64)
        end = np.array(en_l, dtype=np.int64)
        order = np.lexsort((start, dev))
        return cls(dev[order], ap[order], start[order], end[order], devices)


def sessionize(
    events: list[NormalizedEvent], policy: SessionPolicy | None = None, topology: Topology | None = None
) -> Trajectory:
    """Sessionize one device's time-ordered event stream.

    Raises UnsortedInput / MixedDevices on contract violations. ``topology``
    is only needed to translate AP ids; without it, AP ids are interned
    locally.
    """
    policy = policy or SessionPolicy()
    if not events:
        return Trajectory("")
    device = events[0].device
    prev = None
    for e in events:
        if e.device != device:
            raise MixedDevices(f"events mix devices {device[:8]}… and {e.device[:8]}…")
        if prev is not None and e.ts < prev:
            raise UnsortedInput("events are not sorted by timestamp")
        prev = e.ts
    if topology is not None:
        ap_ids = topology.ap_ids
        ap_of = topology.ap_index
    else:
        ap_ids = []
        ap_of = {}
        for e in events:
            if e.ap not in ap_of:
                ap_of[e.ap] = len(ap_ids)
                ap_ids.append(e.ap)
    n = len(events)
    dev = np.zeros(n, dtype=np.int64)
    ts = np.fromiter((e.ts for e in events), dtype=np.int64, count=n)
    sub = np.fromiter((int(e.subtype) for e in events), dtype=np.int64, count=n)
    ap = np.fromiter((ap_of[e.ap] for e in events), dtype=np.int64, count=n)
    order = np.lexsort((ap, sub, ts, dev))
    dev, ts, sub, ap = dev[order], ts[order], sub[order], ap[order]
    keep = np.ones(n, dtype=bool)
    keep[1:] = (ts[1:] != ts[:-1]) | (sub[1:] != sub[:-1]) | (ap[1:] != ap[:-1])
    dev, ts, sub, ap = dev[keep], ts[keep], sub[keep], ap[keep]
    _, s_ap, s_start, s_end = _kernels.sessionize_arrays(
        dev, ts, sub, ap, policy.idle_timeout, policy.min_session
    )
    traj = Trajectory(device)
    for i in range(len(s_ap)):
        traj.sessions.append(Session(device, ap_ids[int(s_ap[i])], int(s_start[i]), int(s_end[i])))
    return traj


def _is_static(traj: Trajectory, policy: DedupePolicy) -> bool:
    if not traj.sessions:
        return False
    aps = {s.ap for s in traj.sessions}
    if len(aps) != 1:
        return False
    span = traj.sessions[-1].end - traj.sessions[0].start
    if span < policy.static_min_hours * 3600:
        return False
    connected = sum(s.duration for s in traj.sessions)
    return connected >= policy.static_min_coverage * span


def dedupe_devices(trajectories, policy: DedupePolicy | None = None) -> list[Trajectory]:
    """Drop duplicate sessions and, optionally, static (non-phone) devices.

    Exact duplicate events are already collapsed during sessionization;
    here identical sessions that survived independent processing are
    removed and the static-device heuristic (single AP, continuous
    presence past the threshold, zero transitions) is applied when enabled.
    """
    policy = policy or DedupePolicy()
    out = []
    for traj in trajectories:
        seen = set()
        kept = []
        for s in traj.sessions:
            key = (s.ap, s.start, s.end)
            if key in seen:
                continue
            seen.add(key)
            kept.append(s)
        deduped = Trajectory(traj.device, kept)
        if policy.drop_static and _is_static(deduped, policy):
            continue
        out.append(deduped)
    return out
