"""Occupancy and mobility measures, phase comparison, CDFs, heatmap grids.

Occupancy is the number of distinct devices whose session overlaps an hour
bucket at an AP mapping to the requested spatial unit. Mobility comes in
two deliberately separate operations: unique places visited per device and
transition counts between units; both are derived from qualified visits
(dwell at least ``min_dwell``, default 3 minutes everywhere except AP
scope, where AP flapping makes short stays meaningful and the default is
zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EmptyPopulation, EmptyTopologyUnit, MissingPositions
from .model import (
    Granularity,
    OccupancySeries,
    Phase,
    PhaseConfig,
    Role,
    TransitionMatrix,
    Trajectory,
)
from .sessions import SessionSet
from .topology import Topology

DEFAULT_MIN_DWELL = 180  # seconds; AP switches under 3 min are unreliable at room level


def default_min_dwell(scope: Granularity) -> int:
    return 0 if scope == Granularity.AP else DEFAULT_MIN_DWELL


def _role_mask(sessions: SessionSet, role_filter, profiles) -> np.ndarray | None:
    """Boolean mask over session rows for devices whose role is allowed.

    Devices without a profile are excluded from role-filtered queries.
    """
    if role_filter is None:
        return None
    if profiles is None:
        raise ValueError("role_filter requires profiles")
    allowed = {Role(r) for r in role_filter}
    dev_ok = np.zeros(len(sessions.devices), dtype=bool)
    for i, hexid in enumerate(sessions.devices):
        p = profiles.get(hexid)
        if p is not None and p.role in allowed:
            dev_ok[i] = True
    return dev_ok[sessions.dev]


def _clip_to_window(sessions: SessionSet, window, extra_mask=None):
    """Rows overlapping the window, with start/end clipped into it."""
    dev, ap, start, end = sessions.dev, sessions.ap, sessions.start, sessions.end
    if window is not None:
        lo, hi = window
        mask = (start < hi) & (end > lo)
        if extra_mask is not None:
            mask &= extra_mask
        dev, ap = dev[mask], ap[mask]
        start = np.clip(start[mask], lo, hi)
        end = np.clip(end[mask], lo, hi)
    elif extra_mask is not None:
        dev, ap = dev[extra_mask], ap[extra_mask]
        start, end = start[extra_mask], end[extra_mask]
    return dev, ap, start, end


def _split_offset_changes(localizer, dev, unit, start, end):
    """Split sessions whose UTC offset changes mid-way (DST transitions) so
    each row maps to one contiguous local-bucket range."""
    off0 = localizer.offset_at(start)
    off1 = localizer.offset_at(end - 1)
    bad = np.flatnonzero(off0 != off1)
    if len(bad) == 0:
        return dev, unit, start, end
    dev_x, unit_x, start_x, end_x = [dev], [unit], [start.copy()], [end.copy()]
    trans = localizer._trans_ts
    for i in bad.tolist():
        s, e = int(start[i]), int(end[i])
        cuts = trans[(trans > s) & (trans < e)]
        pieces = [s, *cuts.tolist(), e]
        start_x[0][i], end_x[0][i] = pieces[0], pieces[1]
        for a, b in zip(pieces[1:-1], pieces[2:]):
            dev_x.append(dev[i : i + 1])
            unit_x.append(unit[i : i + 1])
            start_x.append(np.array([a], dtype=np.int64))
            end_x.append(np.array([b], dtype=np.int64))
    return (
        np.concatenate(dev_x),
        np.concatenate(unit_x),
        np.concatenate(start_x),
        np.concatenate(end_x),
    )


def occupancy(
    sessions: SessionSet,
    topology: Topology,
    granularity: Granularity,
    window: tuple[int, int] | None = None,
    role_filter=None,
    profiles=None,
    bucket: str = "hour",
    units: list[str] | None = None,
) -> OccupancySeries:
    """Distinct devices per (unit, local hour or day bucket)."""
    if bucket not in ("hour", "day"):
        raise ValueError(f"bucket must be 'hour' or 'day', not {bucket!r}")
    if units is not None:
        for u in units:
            if not topology.has_unit(granularity, u):
                raise EmptyTopologyUnit(f"unknown {granularity.value} unit {u!r}")
    loc = topology.localizer
    width = 3600 if bucket == "hour" else 86400
    mask = _role_mask(sessions, role_filter, profiles)
    dev, ap, start, end = _clip_to_window(sessions, window, mask)
    unit_ids = topology.unit_ids(granularity)
    unit = topology.ap_unit_array(granularity)[ap] if len(ap) else ap
    if units is not None and len(dev):
        wanted = np.zeros(len(unit_ids), dtype=bool)
        for u in units:
            wanted[topology.unit_index(granularity, u)] = True
        sel = wanted[unit]
        dev, unit, start, end = dev[sel], unit[sel], start[sel], end[sel]
    counts: dict[tuple[str, int], int] = {}
    if len(dev):
        dev, unit, start, end = _split_offset_changes(loc, dev, unit, start, end)
        b0 = loc.to_local(start) // width
        b1 = loc.to_local(end - 1) // width
        spans = b1 - b0 + 1
        row, buckets = _kernels.expand_buckets(b0, spans)
        bmin = int(buckets.min())
        nb = int(buckets.max()) - bmin + 1
        nd = len(sessions.devices)
        key = (unit[row] * nb + (buckets - bmin)) * nd + dev[row]
        uniq = np.unique(key)
        pair, pair_counts = np.unique(uniq // nd, return_counts=True)
        u_idx = pair // nb
        b_idx = pair % nb + bmin
        for ui, bi, c in zip(u_idx.tolist(), b_idx.tolist(), pair_counts.tolist()):
            counts[(unit_ids[ui], bi)] = int(c)
    return OccupancySeries(granularity, bucket, counts, topology.timezone)


@dataclass
class VisitTable:
    """Qualified visits and the transitions between them, columnar."""

    dev: np.ndarray
    unit: np.ndarray
    arrive: np.ndarray
    depart: np.ndarray
    t_dev: np.ndarray
    t_from: np.ndarray
    t_to: np.ndarray
    t_at: np.ndarray  # arrival instant of the destination visit
    unit_ids: list[str] = field(default_factory=list)
    devices: list[str] = field(default_factory=list)


def qualified_visits(
    sessions: SessionSet,
    topology: Topology,
    scope: Granularity,
    min_dwell: int | None = None,
    role_filter=None,
    profiles=None,
) -> VisitTable:
    """Collapse each device's sessions into visits, keep those with dwell
    >= min_dwell, and derive unit-change transitions."""
    if min_dwell is None:
        min_dwell = default_min_dwell(scope)
    mask = _role_mask(sessions, role_filter, profiles)
    if mask is not None:
        dev, ap = sessions.dev[mask], sessions.ap[mask]
        start, end = sessions.start[mask], sessions.end[mask]
    else:
        dev, ap, start, end = sessions.dev, sessions.ap, sessions.start, sessions.end
    unit = topology.ap_unit_array(scope)[ap] if len(ap) else ap
    v_dev, v_unit, v_arr, v_dep = _kernels.collapse_visits(dev, unit, start, end)
    q = (v_dep - v_arr) >= min_dwell
    v_dev, v_unit, v_arr, v_dep = v_dev[q], v_unit[q], v_arr[q], v_dep[q]
    if len(v_dev) > 1:
        same = v_dev[1:] == v_dev[:-1]
        diff = v_unit[1:] != v_unit[:-1]
        tr = same & diff
        t_dev = v_dev[1:][tr]
        t_from = v_unit[:-1][tr]
        t_to = v_unit[1:][tr]
        t_at = v_arr[1:][tr]
    else:
        z = np.empty(0, dtype=np.int64)
        t_dev, t_from, t_to, t_at = z, z.copy(), z.copy(), z.copy()
    return VisitTable(
        v_dev, v_unit, v_arr, v_dep, t_dev, t_from, t_to, t_at,
        unit_ids=topology.unit_ids(scope), devices=sessions.devices,
    )


def transitions(
    trajectory: Trajectory,
    topology: Topology,
    scope: Granularity,
    min_dwell: int | None = None,
) -> list[tuple[str, str, int]]:
    """One device's (from unit, to unit, instant) transition list."""
    single = SessionSet.from_trajectories([trajectory], topology)
    vt = qualified_visits(single, topology, scope, min_dwell)
    return [
        (vt.unit_ids[int(f)], vt.unit_ids[int(t)], int(at))
        for f, t, at in zip(vt.t_from, vt.t_to, vt.t_at)
    ]


def transition_matrix(
    sessions: SessionSet,
    topology: Topology,
    scope: Granularity,
    window: tuple[int, int] | None = None,
    role_filter=None,
    profiles=None,
    min_dwell: int | None = None,
) -> TransitionMatrix:
    """Aggregate per-device transitions into (from, to) counts, chord-ready."""
    vt = qualified_visits(sessions, topology, scope, min_dwell, role_filter, profiles)
    t_from, t_to, t_at = vt.t_from, vt.t_to, vt.t_at
    if window is not None:
        sel = (t_at >= window[0]) & (t_at < window[1])
        t_from, t_to = t_from[sel], t_to[sel]
    counts: dict[tuple[str, str], int] = {}
    if len(t_from):
        nu = len(vt.unit_ids)
        key = t_from * nu + t_to
        uniq, c = np.unique(key, return_counts=True)
        for k, n in zip(uniq.tolist(), c.tolist()):
            counts[(vt.unit_ids[k // nu], vt.unit_ids[k % nu])] = int(n)
    return TransitionMatrix(scope, window, counts)


def unique_place_counts(
    sessions: SessionSet,
    topology: Topology,
    granularity: Granularity,
    window: tuple[int, int] | None = None,
    min_dwell: int | None = None,
    role_filter=None,
    profiles=None,
) -> dict[str, int]:
    """Distinct units among each device's qualified visits.

    A visit belongs to the window when its arrival instant does, so each
    visit counts toward exactly one phase; devices with no qualified visit
    in the window are absent from the result.
    """
    vt = qualified_visits(sessions, topology, granularity, min_dwell, role_filter, profiles)
    dev, unit, arr = vt.dev, vt.unit, vt.arrive
    if window is not None:
        sel = (arr >= window[0]) & (arr < window[1])
        dev, unit = dev[sel], unit[sel]
    out: dict[str, int] = {}
    if len(dev):
        nu = len(vt.unit_ids)
        uniq = np.unique(dev * nu + unit)
        d, c = np.unique(uniq // nu, return_counts=True)
        for di, ci in zip(d.tolist(), c.tolist()):
            out[vt.devices[di]] = int(ci)
    return out


class EmpiricalCdf:
    """Empirical distribution over integer counts with step quantiles."""

    def __init__(self, values):
        values = np.asarray(sorted(values))
        if len(values) == 0:
            raise EmptyPopulation("cannot build a CDF over zero devices")
        self.n = len(values)
        self.support, counts = np.unique(values, return_counts=True)
        self.cum_fraction = np.cumsum(counts) / self.n

    def quantile(self, q: float):
        """Smallest support value whose cumulative fraction reaches q."""
        if not 0 < q <= 1:
            raise ValueError("quantile order must be in (0, 1]")
        idx = int(np.searchsorted(self.cum_fraction, q - 1e-12))
        idx = min(idx, len(self.support) - 1)
        return self.support[idx].item()

    @property
    def median(self):
        return self.quantile(0.5)

    def to_doc(self) -> dict:
        return {
            "support": self.support.tolist(),
            "cum_fraction": [round(float(f), 9) for f in self.cum_fraction],
            "devices": self.n,
        }


def mobility_cdf(place_counts) -> EmpiricalCdf:
    """CDF of per-device unique-place counts (mapping or sequence)."""
    values = list(place_counts.values()) if isinstance(place_counts, dict) else list(place_counts)
    if not values:
        raise EmptyPopulation("cannot build a CDF over zero devices")
    return EmpiricalCdf(values)


@dataclass
class PhaseCell:
    phase: str
    mean: float
    pct_change: float | None  # None when the baseline mean is zero
    undefined: bool = False


@dataclass
class PhaseComparison:
    metric: str
    granularity: Granularity
    baseline: str
    units: dict[str, list[PhaseCell]]
    unit_kinds: dict[str, str | None] = field(default_factory=dict)

    def cell(self, unit: str, phase: str) -> PhaseCell:
        for c in self.units[unit]:
            if c.phase == phase:
                return c
        raise KeyError(phase)


def _phase_bucket_range(phase: Phase, bucket: str) -> tuple[int, int]:
    lo, hi = phase.day_range
    if bucket == "hour":
        return lo * 24, hi * 24
    return lo, hi


def phase_compare(
    series: OccupancySeries,
    phases: PhaseConfig,
    baseline: str,
    topology: Topology | None = None,
    hour_filter=None,
) -> PhaseComparison:
    """Per-unit percentage change of mean occupancy versus a baseline phase.

    The mean averages over every bucket in the phase (nights and weekends
    included) unless ``hour_filter`` restricts hours of day. Zero-baseline
    units are reported as undefined change, never dropped.
    """
    base = phases[baseline]
    units = sorted({u for u, _ in series.counts})
    sums: dict[tuple[str, str], int] = {}
    nbuckets: dict[str, int] = {}
    for p in phases:
        lo, hi = _phase_bucket_range(p, series.bucket)
        if hour_filter is not None and series.bucket == "hour":
            nb = sum(1 for b in range(lo, hi) if b % 24 in hour_filter)
        else:
            nb = hi - lo
        nbuckets[p.name] = nb
    for (u, b), c in series.counts.items():
        day = b // 24 if series.bucket == "hour" else b
        p = phases.phase_of_day(day)
        if p is None:
            continue
        if hour_filter is not None and series.bucket == "hour" and b % 24 not in hour_filter:
            continue
        sums[(u, p.name)] = sums.get((u, p.name), 0) + c
    out: dict[str, list[PhaseCell]] = {}
    kinds: dict[str, str | None] = {}
    for u in units:
        base_mean = sums.get((u, base.name), 0) / max(nbuckets[base.name], 1)
        cells = []
        for p in phases:
            mean = sums.get((u, p.name), 0) / max(nbuckets[p.name], 1)
            if base_mean == 0:
                cells.append(PhaseCell(p.name, mean, None, undefined=True))
            else:
                cells.append(PhaseCell(p.name, mean, 100.0 * (mean - base_mean) / base_mean))
        out[u] = cells
        if topology is not None:
            kind = topology.kind_of_unit(series.granularity, u)
            kinds[u] = kind.value if kind is not None else None
    return PhaseComparison("occupancy", series.granularity, baseline, out, kinds)


def phase_transition_totals(
    sessions: SessionSet,
    topology: Topology,
    scope: Granularity,
    phases: PhaseConfig,
    min_dwell: int | None = None,
    role_filter=None,
    profiles=None,
) -> dict[str, dict[str, float]]:
    """Mean daily transition departures per unit for each phase."""
    vt = qualified_visits(sessions, topology, scope, min_dwell, role_filter, profiles)
    loc = topology.localizer
    days = loc.day_number(vt.t_at) if len(vt.t_at) else vt.t_at
    out: dict[str, dict[str, float]] = {p.name: {} for p in phases}
    raw: dict[tuple[str, str], int] = {}
    for f, d in zip(vt.t_from.tolist(), days.tolist()):
        p = phases.phase_of_day(d)
        if p is None:
            continue
        key = (p.name, vt.unit_ids[f])
        raw[key] = raw.get(key, 0) + 1
    for (pname, unit), c in raw.items():
        out[pname][unit] = c / phases[pname].n_days
    return out


def compare_transition_totals(
    totals: dict[str, dict[str, float]], phases: PhaseConfig, baseline: str, scope: Granularity
) -> PhaseComparison:
    units = sorted({u for per in totals.values() for u in per})
    out: dict[str, list[PhaseCell]] = {}
    for u in units:
        base_mean = totals.get(baseline, {}).get(u, 0.0)
        cells = []
        for p in phases:
            mean = totals.get(p.name, {}).get(u, 0.0)
            if base_mean == 0:
                cells.append(PhaseCell(p.name, mean, None, undefined=True))
            else:
                cells.append(PhaseCell(p.name, mean, 100.0 * (mean - base_mean) / base_mean))
        out[u] = cells
    return PhaseComparison("transitions", scope, baseline, out)


def heatmap_grid(
    series: OccupancySeries, topology: Topology, floor: str, bucket: int
) -> list[dict]:
    """Per-AP (x, y, count) cells for one floor at one bucket.

    No interpolation: positioning is AP-granular by design. Every AP on
    the floor gets a cell; hours nobody was present render as zero.
    """
    if series.granularity != Granularity.AP:
        raise ValueError("heatmap requires an AP-granularity series")
    infos = topology.aps_of_floor(floor)
    missing = [i.ap for i in infos if i.x is None or i.y is None]
    if missing:
        raise MissingPositions(f"floor {floor!r} APs lack positions: {missing[:3]}")
    return [
        {"ap": i.ap, "x": i.x, "y": i.y, "count": series.get(i.ap, bucket)} for i in infos
    ]
