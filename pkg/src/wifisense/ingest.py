"""Raw AP syslog ingestion: parse, anonymize, resolve, quarantine.

The line grammar is, single-space separated, body = remainder of line:

    hh:mm:ss <controller_name> <process_id> <event_subtype> <MAC_addr> <event_body>

The grammar carries no date. Dates are resolved from a per-stream base date
plus midnight-rollover detection: a time-of-day regression larger than 12 h
starts a new day, a regression of at most 120 s is treated as out-of-order
jitter, and anything between is ambiguous and quarantined.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMac, MalformedLine, RolloverAmbiguity, UnknownAP, UnknownSubtype
from .model import MAC_RE, AuthHint, EventSubtype, NormalizedEvent, SUBTYPE_TOKENS
from .topology import Topology

MAC_EXACT_RE = re.compile(r"^[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}$")
_TIME_RE = re.compile(r"^\d{2}:\d{2}:\d{2}$")
_FILE_DATE_RE = re.compile(r"(\d{4}-\d{2}-\d{2})")

JITTER_TOLERANCE = 120  # seconds of backward reordering absorbed
ROLLOVER_GAP = 43200  # regressions beyond 12 h mean a new day

REASON_MALFORMED = "malformed_line"
REASON_UNKNOWN_SUBTYPE = "unknown_subtype"
REASON_BAD_MAC = "bad_mac"
REASON_UNKNOWN_AP = "unknown_ap"
REASON_ROLLOVER = "rollover_ambiguity"


@dataclass(frozen=True)
class RawEvent:
    """One parsed log line, fields verbatim. Never leaves parser scope
    with its MAC; downstream sees only the anonymized digest."""

    time_of_day: str
    controller: str
    process_id: str
    subtype_token: str
    mac: str
    body: str

    @property
    def tod_seconds(self) -> int:
        t = self.time_of_day
        return int(t[0:2]) * 3600 + int(t[3:5]) * 60 + int(t[6:8])


def parse_line(line: str) -> RawEvent:
    """Parse one log line or raise MalformedLine/UnknownSubtype.

    Total over text: any input either yields a RawEvent or a structured
    error carrying the byte offset of the first violation.
    """
    line = line.rstrip("\n")
    parts = line.split(" ", 5)
    if len(parts) < 6:
        raise MalformedLine(
            f"expected 6 space-separated fields, got {len(parts)}", offset=len(line)
        )
    tod, controller, process_id, token, mac, body = parts
    if not _TIME_RE.match(tod):
        raise MalformedLine(f"bad time of day {tod!r}", offset=0)
    h, m, s = int(tod[0:2]), int(tod[3:5]), int(tod[6:8])
    if h > 23 or m > 59 or s > 59:
        raise MalformedLine(f"time of day {tod!r} out of range", offset=0)
    offset = len(tod) + 1
    if not controller:
        raise MalformedLine("empty controller field", offset=offset)
    offset += len(controller) + 1
    if not process_id:
        raise MalformedLine("empty process id field", offset=offset)
    offset += len(process_id) + 1
    if token not in SUBTYPE_TOKENS:
        raise UnknownSubtype(f"unknown event subtype {token!r}", offset=offset)
    offset += len(token) + 1
    if not MAC_EXACT_RE.match(mac):
        raise MalformedLine("field 5 is not a MAC address", offset=offset)
    offset += len(mac) + 1
    if not body:
        raise MalformedLine("empty event body", offset=offset)
    return RawEvent(tod, controller, process_id, token, mac, body)


def anonymize(mac: str, salt: bytes) -> str:
    """SHA-256 digest of (salt || uppercase MAC), as 64 lowercase hex chars.

    Uppercasing makes "aa:bb:.." and "AA:BB:.." collide intentionally, so
    one physical device keeps one id across controllers.
    """
    if not MAC_EXACT_RE.match(mac):
        raise BadMac(f"not a MAC address: {mac!r}")
    if not salt:
        raise BadMac("empty salt")
    return hashlib.sha256(salt + mac.upper().encode("ascii")).hexdigest()


def redact_macs(text: str) -> str:
    return MAC_RE.sub("[mac-redacted]", text)


@dataclass
class IngestContext:
    """Per-stream state needed to turn RawEvents into NormalizedEvents."""

    base_date: dt.date
    salt: bytes
    topology: Topology
    ap_rule: str = "AP="
    auth_rule: str = "login="

    def __post_init__(self):
        if not self.salt:
            raise ValueError("salt must be non-empty")
        self.base_day = self.topology.localizer.day_number_of_date(self.base_date)


@dataclass
class RolloverState:
    """Mutable day counter threaded through one stream's normalization."""

    day: int = 0
    prev_loc: int = -(1 << 62)


@dataclass
class QuarantineRecord:
    line_number: int
    reason: str
    raw_line: str  # MAC-redacted
    source: str = ""

    def to_json(self) -> str:
        rec = {"line_number": self.line_number, "reason": self.reason, "raw_line": self.raw_line}
        if self.source:
            rec["source"] = self.source
        return json.dumps(rec)


def _extract_token(body: str, rule: str) -> str | None:
    i = body.find(rule)
    if i < 0:
        return None
    tok = body[i + len(rule):]
    j = tok.find(" ")
    if j >= 0:
        tok = tok[:j]
    return tok or None


def _resolve_loc(tod: int, state: RolloverState, base_day: int) -> int:
    """Wall-clock seconds for this line, in local-seconds space.

    Raises RolloverAmbiguity for regressions inside (jitter, 12h].
    """
    c = (base_day + state.day) * 86400 + tod
    if state.prev_loc == -(1 << 62):
        state.prev_loc = c
        return c
    if c < state.prev_loc - ROLLOVER_GAP:
        state.day += 1
        c += 86400
    elif c > state.prev_loc + ROLLOVER_GAP and c - 86400 >= state.prev_loc - JITTER_TOLERANCE:
        # A line from just before midnight arriving after the rollover.
        c -= 86400
    if c >= state.prev_loc - JITTER_TOLERANCE:
        if c > state.prev_loc:
            state.prev_loc = c
        return c
    raise RolloverAmbiguity(
        f"time regression of {state.prev_loc - c}s exceeds the {JITTER_TOLERANCE}s "
        "reorder tolerance but is too small for a midnight rollover"
    )


def normalize(raw: RawEvent, ctx: IngestContext, state: RolloverState) -> NormalizedEvent:
    """Resolve one RawEvent to an absolute, anonymized NormalizedEvent.

    Raises UnknownAP when the body's AP is not in the topology and
    RolloverAmbiguity on unresolvable time regressions; callers divert
    both to the quarantine channel.
    """
    loc = _resolve_loc(raw.tod_seconds, state, ctx.base_day)
    ap = _extract_token(raw.body, ctx.ap_rule)
    if ap is None or ap not in ctx.topology.ap_index:
        raise UnknownAP(f"event body does not resolve to a known AP")
    subtype = SUBTYPE_TOKENS[raw.subtype_token]
    hint = AuthHint.NONE
    if subtype == EventSubtype.AUTHENTICATION:
        tok = _extract_token(raw.body, ctx.auth_rule)
        if tok == "staff":
            hint = AuthHint.STAFF_LOGIN
        elif tok == "student":
            hint = AuthHint.STUDENT_LOGIN
    ts = int(ctx.topology.localizer.from_local(loc))
    return NormalizedEvent(
        ts=ts,
        controller=raw.controller,
        process_id=raw.process_id,
        subtype=subtype,
        device=anonymize(raw.mac, ctx.salt),
        ap=ap,
        auth_role_hint=hint,
    )


@dataclass
class EventColumns:
    """Columnar normalized events; the bulk-path equivalent of
    a NormalizedEvent list (controller/process id are not retained)."""

    ts: np.ndarray  # int64 epoch seconds
    dev: np.ndarray  # int64 index into devices
    ap: np.ndarray  # int64 index into topology.ap_ids
    sub: np.ndarray  # int64 EventSubtype codes
    hint: np.ndarray  # int64 AuthHint codes
    devices: list[str] = field(default_factory=list)  # index -> hex digest
    quarantined: list[QuarantineRecord] = field(default_factory=list)
    lines_seen: int = 0

    def __len__(self):
        return len(self.ts)


def ingest_lines(lines, ctx: IngestContext, source: str = "") -> EventColumns:
    """Fast columnar parse+normalize of an iterable of log lines.

    Semantically equivalent to parse_line+normalize per line (the object
    path), with unresolvable lines quarantined instead of raised.
    """
    subtype_map = SUBTYPE_TOKENS
    ap_index = ctx.topology.ap_index
    ap_rule = ctx.ap_rule
    auth_rule = ctx.auth_rule
    salt = ctx.salt
    base_day = ctx.base_day
    auth_code = int(EventSubtype.AUTHENTICATION)

    tod_cache: dict[str, int] = {}
    dev_cache: dict[str, int] = {}
    body_cache: dict[str, int] = {}
    hint_cache: dict[str, int] = {}
    devices: list[str] = []
    quarantined: list[QuarantineRecord] = []

    locs, devs, aps, subs, hints = [], [], [], [], []
    loc_app, dev_app, ap_app, sub_app, hint_app = (
        locs.append, devs.append, aps.append, subs.append, hints.append,
    )

    day = 0
    prev_loc = -(1 << 62)
    lineno = 0

    def bad(reason, line):
        quarantined.append(QuarantineRecord(lineno, reason, redact_macs(line.rstrip("\n")), source))

    for line in lines:
        lineno += 1
        parts = line.split(" ", 5)
        if len(parts) < 6:
            bad(REASON_MALFORMED, line)
            continue
        tod_s = parts[0]
        tod = tod_cache.get(tod_s)
        if tod is None:
            if not _TIME_RE.match(tod_s):
                bad(REASON_MALFORMED, line)
                continue
            h, m, s = int(tod_s[0:2]), int(tod_s[3:5]), int(tod_s[6:8])
            if h > 23 or m > 59 or s > 59:
                bad(REASON_MALFORMED, line)
                continue
            tod = h * 3600 + m * 60 + s
            tod_cache[tod_s] = tod
        sc = subtype_map.get(parts[3])
        if sc is None:
            bad(REASON_UNKNOWN_SUBTYPE, line)
            continue
        if not parts[1] or not parts[2]:
            bad(REASON_MALFORMED, line)
            continue
        mac = parts[4]
        d = dev_cache.get(mac)
        if d is None:
            if not MAC_EXACT_RE.match(mac):
                bad(REASON_BAD_MAC, line)
                continue
            digest = hashlib.sha256(salt + mac.upper().encode("ascii")).hexdigest()
            d = len(devices)
            devices.append(digest)
            dev_cache[mac] = d
        body = parts[5]
        if body.endswith("\n"):
            body = body[:-1]
        if not body:
            bad(REASON_MALFORMED, line)
            continue
        a = body_cache.get(body)
        if a is None:
            tok = _extract_token(body, ap_rule)
            a = ap_index.get(tok, -1) if tok is not None else -1
            body_cache[body] = a
        if a < 0:
            bad(REASON_UNKNOWN_AP, line)
            continue

        # midnight rollover / jitter resolution, in local seconds
        c = (base_day + day) * 86400 + tod
        if prev_loc == -(1 << 62):
            prev_loc = c
        else:
            if c < prev_loc - ROLLOVER_GAP:
                day += 1
                c += 86400
            elif c > prev_loc + ROLLOVER_GAP and c - 86400 >= prev_loc - JITTER_TOLERANCE:
                c -= 86400
            if c >= prev_loc - JITTER_TOLERANCE:
                if c > prev_loc:
                    prev_loc = c
            else:
                bad(REASON_ROLLOVER, line)
                continue

        hv = 0
        if sc == auth_code:
            hv = hint_cache.get(body, -1)
            if hv < 0:
                tok = _extract_token(body, auth_rule)
                hv = 1 if tok == "staff" else 2 if tok == "student" else 0
                hint_cache[body] = hv

        loc_app(c)
        dev_app(d)
        ap_app(a)
        sub_app(int(sc))
        hint_app(hv)

    loc_arr = np.array(locs, dtype=np.int64)
    ts = ctx.topology.localizer.from_local(loc_arr) if len(loc_arr) else loc_arr
    return EventColumns(
        ts=np.asarray(ts, dtype=np.int64),
        dev=np.array(devs, dtype=np.int64),
        ap=np.array(aps, dtype=np.int64),
        sub=np.array(subs, dtype=np.int64),
        hint=np.array(hints, dtype=np.int64),
        devices=devices,
        quarantined=quarantined,
        lines_seen=lineno,
    )


def base_date_of_file(path: Path, fallback: dt.date | None) -> dt.date:
    """Daily log files conventionally carry their date in the name."""
    m = _FILE_DATE_RE.search(path.name)
    if m:
        return dt.date.fromisoformat(m.group(1))
    if fallback is None:
        raise ValueError(
            f"cannot infer base date for {path.name!r}; pass an explicit base date"
        )
    return fallback


def _ingest_one(args):
    path, base_date, salt, topology, ap_rule, auth_rule = args
    ctx = IngestContext(base_date, salt, topology, ap_rule, auth_rule)
    # bulk read: one split beats per-line iteration and leaves no trailing
    # newlines for the parser to strip
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return ingest_lines(lines, ctx, source=Path(path).name)


def ingest_files(
    paths,
    topology: Topology,
    salt: bytes,
    base_date: dt.date | None = None,
    ap_rule: str = "AP=",
    auth_rule: str = "login=",
    workers: int = 1,
) -> EventColumns:
    """Parse and normalize one or more daily log files into merged columns.

    Files are independent streams (each gets its own rollover state and a
    base date from its filename, falling back to ``base_date`` for the
    first and day-sequential dates after it). With workers > 1 files are
    parsed in parallel processes and merged in argument order, so output
    is identical regardless of scheduling.
    """
    paths = [Path(p) for p in paths]
    tasks = []
    cursor = base_date
    for p in paths:
        d = base_date_of_file(p, cursor)
        tasks.append((p, d, salt, topology, ap_rule, auth_rule))
        cursor = d + dt.timedelta(days=1)

    if workers > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            parts = pool.map(_ingest_one, tasks)
    else:
        parts = [_ingest_one(t) for t in tasks]

    if len(parts) == 1:
        return parts[0]

    devices: list[str] = []
    dev_index: dict[str, int] = {}
    remapped = []
    for part in parts:
        local_to_global = np.empty(len(part.devices), dtype=np.int64)
        for i, hexid in enumerate(part.devices):
            g = dev_index.get(hexid)
            if g is None:
                g = len(devices)
                devices.append(hexid)
                dev_index[hexid] = g
            local_to_global[i] = g
        remapped.append(local_to_global[part.dev] if len(part.dev) else part.dev)

    return EventColumns(
        ts=np.concatenate([p.ts for p in parts]) if parts else np.empty(0, np.int64),
        dev=np.concatenate(remapped),
        ap=np.concatenate([p.ap for p in parts]),
        sub=np.concatenate([p.sub for p in parts]),
        hint=np.concatenate([p.hint for p in parts]),
        devices=devices,
        quarantined=[q for p in parts for q in p.quarantined],
        lines_seen=sum(p.lines_seen for p in parts),
    )


def write_quarantine(records, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(rec.to_json())
            f.write("\n")
