"""Hot inner loops: sessionization, visit collapse, bucket expansion.

Each kernel is written as a plain function over numpy arrays and compiled
with numba's @njit when available. Setting WIFISENSE_NO_NUMBA=1 selects the
pure numpy/Python fallback path; `wifisense bench` compares both backends.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("WIFISENSE_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by WIFISENSE_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    njit = None
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "python"

# Subtype codes mirror model.EventSubtype; kept as plain ints so the
# kernels stay nopython-compatible.
_DISASSOC = 0
_DEAUTH = 1
_ASSOC = 2
_REASSOC = 3
_DRIFT = 4


def _sessionize_loop(dev, ts, sub, ap, idle, min_session, out_dev, out_ap, out_start, out_end):
    """State machine over events sorted by (device, ts, subtype, ap).

    Association/reassociation opens (or keep-alives) a session; an AP switch
    closes the open one at min(switch instant, last event + idle). Explicit
    disassociation/deauthentication closes at its own instant. Drift is a
    keep-alive on the same AP and a reconnect otherwise. Returns the number
    of sessions written. Zero-length sessions are discarded.
    """
    m = 0
    n = dev.shape[0]
    cur_dev = np.int64(-1)
    cur_ap = np.int64(-1)
    cur_start = np.int64(0)
    last_seen = np.int64(0)
    for i in range(n):
        d = dev[i]
        if d != cur_dev:
            if cur_ap >= 0:
                e = last_seen + idle
                if e > cur_start and e - cur_start >= min_session:
                    out_dev[m] = cur_dev
                    out_ap[m] = cur_ap
                    out_start[m] = cur_start
                    out_end[m] = e
                    m += 1
            cur_dev = d
            cur_ap = -1
        s = sub[i]
        t = ts[i]
        a = ap[i]
        if s == _ASSOC or s == _REASSOC:
            if cur_ap == a:
                last_seen = t
            else:
                if cur_ap >= 0:
                    e = last_seen + idle
                    if t < e:
                        e = t
                    if e > cur_start and e - cur_start >= min_session:
                        out_dev[m] = cur_dev
                        out_ap[m] = cur_ap
                        out_start[m] = cur_start
                        out_end[m] = e
                        m += 1
                cur_ap = a
                cur_start = t
                last_seen = t
        elif s == _DISASSOC or s == _DEAUTH:
            if cur_ap >= 0:
                if t > cur_start and t - cur_start >= min_session:
                    out_dev[m] = cur_dev
                    out_ap[m] = cur_ap
                    out_start[m] = cur_start
                    out_end[m] = t
                    m += 1
                cur_ap = -1
        elif s == _DRIFT:
            if cur_ap == a:
                last_seen = t
            else:
                if cur_ap >= 0:
                    e = last_seen + idle
                    if t < e:
                        e = t
                    if e > cur_start and e - cur_start >= min_session:
                        out_dev[m] = cur_dev
                        out_ap[m] = cur_ap
                        out_start[m] = cur_start
                        out_end[m] = e
                        m += 1
                cur_ap = a
                cur_start = t
                last_seen = t
        # authentication: no session effect
    if cur_ap >= 0:
        e = last_seen + idle
        if e > cur_start and e - cur_start >= min_session:
            out_dev[m] = cur_dev
            out_ap[m] = cur_ap
            out_start[m] = cur_start
            out_end[m] = e
            m += 1
    return m


def _visits_loop(dev, unit, start, end, out_dev, out_unit, out_arrive, out_depart):
    """Collapse consecutive same-unit sessions of each device into visits."""
    m = 0
    n = dev.shape[0]
    cur_dev = np.int64(-1)
    cur_unit = np.int64(-1)
    arrive = np.int64(0)
    depart = np.int64(0)
    for i in range(n):
        d = dev[i]
        u = unit[i]
        if d != cur_dev:
            if cur_dev >= 0:
                out_dev[m] = cur_dev
                out_unit[m] = cur_unit
                out_arrive[m] = arrive
                out_depart[m] = depart
                m += 1
            cur_dev = d
            cur_unit = u
            arrive = start[i]
            depart = end[i]
        elif u == cur_unit:
            depart = end[i]
        else:
            out_dev[m] = cur_dev
            out_unit[m] = cur_unit
            out_arrive[m] = arrive
            out_depart[m] = depart
            m += 1
            cur_unit = u
            arrive = start[i]
            depart = end[i]
    if cur_dev >= 0:
        out_dev[m] = cur_dev
        out_unit[m] = cur_unit
        out_arrive[m] = arrive
        out_depart[m] = depart
        m += 1
    return m


def _expand_loop(first_bucket, spans, out_row, out_bucket):
    """Flatten per-session contiguous bucket ranges into (row, bucket) pairs."""
    k = 0
    for i in range(first_bucket.shape[0]):
        b = first_bucket[i]
        for j in range(spans[i]):
            out_row[k] = i
            out_bucket[k] = b + j
            k += 1
    return k


if HAS_NUMBA:
    _sessionize_impl = njit(cache=True, nogil=True)(_sessionize_loop)
    _visits_impl = njit(cache=True, nogil=True)(_visits_loop)
    _expand_impl = njit(cache=True, nogil=True)(_expand_loop)
else:
    _sessionize_impl = _sessionize_loop
    _visits_impl = _visits_loop
    _expand_impl = _expand_loop


def sessionize_arrays(dev, ts, sub, ap, idle: int, min_session: int = 0):
    """Run the sessionizer state machine; returns (dev, ap, start, end) arrays.

    Inputs must already be sorted by (device, ts, subtype, ap) with exact
    duplicates removed.
    """
    n = len(dev)
    out_dev = np.empty(n + 1, dtype=np.int64)
    out_ap = np.empty(n + 1, dtype=np.int64)
    out_start = np.empty(n + 1, dtype=np.int64)
    out_end = np.empty(n + 1, dtype=np.int64)
    if n:
        m = _sessionize_impl(
            dev, ts, sub, ap, np.int64(idle), np.int64(min_session),
            out_dev, out_ap, out_start, out_end,
        )
    else:
        m = 0
    return out_dev[:m].copy(), out_ap[:m].copy(), out_start[:m].copy(), out_end[:m].copy()


def collapse_visits(dev, unit, start, end):
    """Collapse sessions (sorted by device, start) into per-device visits."""
    n = len(dev)
    out_dev = np.empty(n, dtype=np.int64)
    out_unit = np.empty(n, dtype=np.int64)
    out_arrive = np.empty(n, dtype=np.int64)
    out_depart = np.empty(n, dtype=np.int64)
    if n:
        m = _visits_impl(dev, unit, start, end, out_dev, out_unit, out_arrive, out_depart)
    else:
        m = 0
    return out_dev[:m].copy(), out_unit[:m].copy(), out_arrive[:m].copy(), out_depart[:m].copy()


def expand_buckets(first_bucket, spans):
    """(row index, bucket) pairs for contiguous ranges starting at first_bucket."""
    total = int(spans.sum())
    if HAS_NUMBA:
        out_row = np.empty(total, dtype=np.int64)
        out_bucket = np.empty(total, dtype=np.int64)
        if total:
            _expand_impl(first_bucket, spans, out_row, out_bucket)
        return out_row, out_bucket
    # vectorized numpy fallback
    if not total:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    row = np.repeat(np.arange(len(first_bucket), dtype=np.int64), spans)
    bases = np.repeat(np.cumsum(spans) - spans, spans)
    bucket = first_bucket[row] + (np.arange(total, dtype=np.int64) - bases)
    return row, bucket


def warmup():
    """Trigger JIT compilation so benchmarks measure steady state."""
    dev = np.array([0, 0], dtype=np.int64)
    ts = np.array([0, 60], dtype=np.int64)
    sub = np.array([_ASSOC, _DISASSOC], dtype=np.int64)
    ap = np.array([0, 0], dtype=np.int64)
    sessionize_arrays(dev, ts, sub, ap, 1800)
    collapse_visits(*sessionize_arrays(dev, ts, sub, ap, 1800))
    expand_buckets(np.array([1], dtype=np.int64), np.array([2], dtype=np.int64))
