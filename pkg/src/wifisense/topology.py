"""Campus topology: AP -> (building, floor, area) mapping and local time math.

All spatial aggregation is grounded here. Hour and day buckets are aligned
to the campus-local timezone declared in the topology document; the
Localizer owns that conversion.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from zoneinfo import ZoneInfo

import numpy as np

from .errors import DuplicateAP, EmptyTopologyUnit, SchemaError
from .model import AreaKind, Granularity, _load_doc

_EPOCH = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)
_EPOCH_NAIVE = dt.datetime(1970, 1, 1)


class Localizer:
    """Maps epoch instants to campus-local wall-clock buckets.

    Local time is represented as "local seconds": epoch seconds shifted by
    the UTC offset in force at that instant. Hour buckets are local seconds
    // 3600, day numbers local seconds // 86400. A DST skip leaves an empty
    bucket; a DST repeat merges two UTC hours into one wall-clock bucket,
    which matches how wall-clock figures are read.
    """

    def __init__(self, tzname: str, year_lo: int = 2010, year_hi: int = 2040):
        self.tzname = tzname
        try:
            tz = ZoneInfo(tzname)
        except Exception as exc:
            raise SchemaError(f"unknown timezone {tzname!r}: {exc}") from None
        self._tz = tz
        starts, offs = self._scan_transitions(year_lo, year_hi)
        self._trans_ts = starts  # int64, trans_ts[0] is -inf sentinel
        self._offs = offs  # int64 seconds

    def _offset_of(self, ts: int) -> int:
        d = dt.datetime.fromtimestamp(ts, self._tz)
        return int(d.utcoffset().total_seconds())

    def _scan_transitions(self, year_lo: int, year_hi: int):
        t0 = int((dt.datetime(year_lo, 1, 1, tzinfo=dt.timezone.utc) - _EPOCH).total_seconds())
        t1 = int((dt.datetime(year_hi, 1, 1, tzinfo=dt.timezone.utc) - _EPOCH).total_seconds())
        starts = [np.iinfo(np.int64).min]
        offs = [self._offset_of(t0)]
        day = 86400
        t = t0
        while t < t1:
            nxt = t + day
            o_prev, o_next = self._offset_of(t), self._offset_of(nxt)
            if o_next != o_prev:
                lo, hi = t, nxt
                while hi - lo > 1:  # bisect the transition instant
                    mid = (lo + hi) // 2
                    if self._offset_of(mid) == o_prev:
                        lo = mid
                    else:
                        hi = mid
                starts.append(hi)
                offs.append(o_next)
            t = nxt
        return np.array(starts, dtype=np.int64), np.array(offs, dtype=np.int64)

    # -- epoch -> local ------------------------------------------------

    def offset_at(self, ts) -> np.ndarray:
        idx = np.searchsorted(self._trans_ts, ts, side="right") - 1
        return self._offs[idx]

    def to_local(self, ts):
        """Epoch seconds -> local seconds. Accepts scalars or arrays."""
        return np.asarray(ts, dtype=np.int64) + self.offset_at(ts)

    def hour_bucket(self, ts):
        return self.to_local(ts) // 3600

    def day_number(self, ts):
        return self.to_local(ts) // 86400

    # -- local -> epoch ------------------------------------------------

    def from_local(self, loc):
        """Local seconds -> epoch seconds.

        Ambiguous local times (DST repeat) resolve to their first
        occurrence; skipped local times map to the transition instant.
        """
        loc = np.asarray(loc, dtype=np.int64)
        scalar = loc.ndim == 0
        loc = np.atleast_1d(loc)
        idx = np.searchsorted(self._trans_ts + self._offs, loc, side="right") - 1
        idx = np.clip(idx, 0, len(self._offs) - 1)
        ts = loc - self._offs[idx]
        if len(self._offs) > 1:
            # a DST repeat renders the same wall time in the previous segment
            # too; first occurrence wins
            prev = np.maximum(idx - 1, 0)
            ts_prev = loc - self._offs[prev]
            use_prev = (idx > 0) & (self.to_local(ts_prev) == loc)
            ts = np.where(use_prev, ts_prev, ts)
        bad = self.to_local(ts) != loc
        if np.any(bad):
            ts = ts.copy()
            for i in np.flatnonzero(bad):
                ts[i] = self._from_local_scalar(int(loc[i]))
        return int(ts[0]) if scalar else ts

    def _from_local_scalar(self, loc: int) -> int:
        candidates = []
        for off, start in zip(self._offs, self._trans_ts):
            t = loc - int(off)
            if self.to_local(t) == loc:
                candidates.append(t)
        if candidates:
            return min(candidates)  # first occurrence wins
        # Skipped wall-clock time: land on the transition that skipped it.
        pos = np.searchsorted(self._trans_ts + self._offs, loc, side="right")
        pos = min(pos, len(self._trans_ts) - 1)
        return int(self._trans_ts[pos])

    # -- rendering -----------------------------------------------------

    def hour_bucket_iso(self, bucket: int) -> str:
        return (_EPOCH_NAIVE + dt.timedelta(seconds=int(bucket) * 3600)).strftime(
            "%Y-%m-%dT%H:00"
        )

    def day_iso(self, day_number: int) -> str:
        return (dt.date(1970, 1, 1) + dt.timedelta(days=int(day_number))).isoformat()

    def parse_local(self, text: str) -> int:
        """Naive local ISO-8601 datetime or date -> local seconds."""
        try:
            if "T" in text:
                d = dt.datetime.fromisoformat(text)
            else:
                d = dt.datetime.combine(dt.date.fromisoformat(text), dt.time())
        except ValueError as exc:
            raise SchemaError(f"bad local time {text!r}: {exc}") from None
        if d.tzinfo is not None:
            raise SchemaError(f"local time {text!r} must be naive (campus timezone)")
        return int((d - _EPOCH_NAIVE).total_seconds())

    def parse_instant(self, text: str) -> int:
        """Naive local ISO-8601 -> epoch seconds."""
        return int(self.from_local(self.parse_local(text)))

    def day_number_of_date(self, d: dt.date) -> int:
        return d.toordinal() - dt.date(1970, 1, 1).toordinal()


@dataclass(frozen=True)
class APInfo:
    ap: str
    building: str
    floor: str
    area: str
    area_kind: AreaKind
    x: float | None = None
    y: float | None = None


class Topology:
    """Immutable AP -> location mapping plus per-granularity index tables."""

    def __init__(self, aps: list[APInfo], timezone: str):
        self.timezone = timezone
        self.localizer = Localizer(timezone)
        self.aps: dict[str, APInfo] = {}
        area_home: dict[str, tuple[str, str]] = {}
        floor_home: dict[str, str] = {}
        for info in aps:
            if info.ap in self.aps:
                raise DuplicateAP(f"AP {info.ap!r} appears more than once")
            home = (info.building, info.floor)
            prev = area_home.setdefault(info.area, home)
            if prev != home:
                raise SchemaError(
                    f"area {info.area!r} spans {prev} and {home}; "
                    "an area belongs to exactly one (building, floor)"
                )
            fprev = floor_home.setdefault(info.floor, info.building)
            if fprev != info.building:
                raise SchemaError(f"floor {info.floor!r} spans two buildings")
            self.aps[info.ap] = info

        self.ap_ids: list[str] = list(self.aps)
        self.ap_index = {a: i for i, a in enumerate(self.ap_ids)}
        self._unit_ids: dict[Granularity, list[str]] = {}
        self._unit_index: dict[Granularity, dict[str, int]] = {}
        self._ap_unit: dict[Granularity, np.ndarray] = {}
        for gran, key in (
            (Granularity.AP, lambda i: i.ap),
            (Granularity.AREA, lambda i: i.area),
            (Granularity.FLOOR, lambda i: i.floor),
            (Granularity.BUILDING, lambda i: i.building),
        ):
            ids: list[str] = []
            index: dict[str, int] = {}
            arr = np.empty(len(self.ap_ids), dtype=np.int64)
            for j, ap in enumerate(self.ap_ids):
                u = key(self.aps[ap])
                if u not in index:
                    index[u] = len(ids)
                    ids.append(u)
                arr[j] = index[u]
            self._unit_ids[gran] = ids
            self._unit_index[gran] = index
            self._ap_unit[gran] = arr

    def __len__(self):
        return len(self.aps)

    def unit_ids(self, granularity: Granularity) -> list[str]:
        return self._unit_ids[granularity]

    def unit_index(self, granularity: Granularity, unit: str) -> int:
        try:
            return self._unit_index[granularity][unit]
        except KeyError:
            raise EmptyTopologyUnit(f"unknown {granularity.value} unit {unit!r}") from None

    def has_unit(self, granularity: Granularity, unit: str) -> bool:
        return unit in self._unit_index[granularity]

    def ap_unit_array(self, granularity: Granularity) -> np.ndarray:
        """Per-AP unit index, aligned with ``ap_ids`` order."""
        return self._ap_unit[granularity]

    def unit_of_ap(self, ap: str, granularity: Granularity) -> str:
        info = self.aps[ap]
        return {
            Granularity.AP: info.ap,
            Granularity.AREA: info.area,
            Granularity.FLOOR: info.floor,
            Granularity.BUILDING: info.building,
        }[granularity]

    def kind_of_area(self, area: str) -> AreaKind:
        for info in self.aps.values():
            if info.area == area:
                return info.area_kind
        raise EmptyTopologyUnit(f"unknown area {area!r}")

    def kind_of_unit(self, granularity: Granularity, unit: str) -> AreaKind | None:
        """Area kind for AP/Area units; floors and buildings have none."""
        if granularity == Granularity.AP:
            if unit not in self.aps:
                raise EmptyTopologyUnit(f"unknown AP {unit!r}")
            return self.aps[unit].area_kind
        if granularity == Granularity.AREA:
            return self.kind_of_area(unit)
        return None

    def buildings(self) -> list[str]:
        return self._unit_ids[Granularity.BUILDING]

    def floors_of(self, building: str) -> list[str]:
        if building not in self._unit_index[Granularity.BUILDING]:
            raise EmptyTopologyUnit(f"unknown building {building!r}")
        out, seen = [], set()
        for info in self.aps.values():
            if info.building == building and info.floor not in seen:
                seen.add(info.floor)
                out.append(info.floor)
        return out

    def aps_of_floor(self, floor: str) -> list[APInfo]:
        if floor not in self._unit_index[Granularity.FLOOR]:
            raise EmptyTopologyUnit(f"unknown floor {floor!r}")
        return [i for i in self.aps.values() if i.floor == floor]

    def to_doc(self) -> dict:
        rows = []
        for info in self.aps.values():
            row = {
                "ap": info.ap,
                "building": info.building,
                "floor": info.floor,
                "area": info.area,
                "area_kind": info.area_kind.value,
            }
            if info.x is not None:
                row["x"] = info.x
            if info.y is not None:
                row["y"] = info.y
            rows.append(row)
        return {"schema": "wifisense.topology/1", "timezone": self.timezone, "aps": rows}


def load_topology(source) -> Topology:
    """Load and validate a topology document (JSON path, text, or dict)."""
    doc = _load_doc(source, "topology")
    tzname = doc.get("timezone")
    if not isinstance(tzname, str) or not tzname:
        raise SchemaError("topology document must declare a 'timezone'")
    rows = doc.get("aps")
    if not isinstance(rows, list):
        raise SchemaError("topology document requires an 'aps' list")
    infos = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise SchemaError(f"ap row {i} is not an object")
        try:
            kind = AreaKind(row.get("area_kind", "Other"))
        except ValueError:
            raise SchemaError(f"ap row {i}: unknown area_kind {row.get('area_kind')!r}") from None
        try:
            info = APInfo(
                ap=row["ap"],
                building=row["building"],
                floor=row["floor"],
                area=row["area"],
                area_kind=kind,
                x=float(row["x"]) if "x" in row else None,
                y=float(row["y"]) if "y" in row else None,
            )
        except KeyError as exc:
            raise SchemaError(f"ap row {i} missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"ap row {i}: {exc}") from None
        for name in ("ap", "building", "floor", "area"):
            if not isinstance(getattr(info, name), str) or not getattr(info, name):
                raise SchemaError(f"ap row {i}: field {name!r} must be a non-empty string")
        infos.append(info)
    return Topology(infos, tzname)
