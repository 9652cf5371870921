"""Throughput benchmark: ingest+sessionize rate and kernel backend compare.

Run via `wifisense bench`. Two measurements:

  * pipeline: events/second from raw log text to session arrays, single
    process and (when the machine has the cores) a 4-way parallel run over
    the daily files.
  * kernels: the numba-jitted inner loops against the pure numpy/Python
    fallback (what you get under WIFISENSE_NO_NUMBA=1).
"""

from __future__ import annotations

import multiprocessing
import os
import tempfile
import time
from pathlib import Path

import numpy as np

from . import _kernels, synth
from .ingest import ingest_files
from .sessions import SessionPolicy, SessionSet


def _materialize_corpus(gen: synth.Generated, outdir: Path) -> list[Path]:
    logdir = outdir / "logs"
    logdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(gen.day_files):
        p = logdir / name
        with open(p, "w", encoding="utf-8") as f:
            f.write("\n".join(gen.day_files[name]))
            f.write("\n")
        paths.append(p)
    return paths


def _run_pipeline(paths, topology, salt, workers: int):
    t0 = time.perf_counter()
    cols = ingest_files(paths, topology, salt, workers=workers)
    t_parse = time.perf_counter() - t0
    t1 = time.perf_counter()
    sessions = SessionSet.from_events(cols, SessionPolicy())
    t_sess = time.perf_counter() - t1
    return cols, sessions, t_parse, t_sess


def run_benchmark(
    events_target: int = 1_000_000,
    workers: int = 4,
    corpus_dir: str | None = None,
    keep_corpus: bool = False,
    repeat: int = 2,
) -> dict:
    """Measure the pipeline. Each configuration runs ``repeat`` times and
    reports the fastest pass (timeit semantics: throughput is a property of
    the code, not of whatever else the host was doing)."""
    salt = b"bench-salt"
    agents = max(200, int(events_target / 400))
    config = synth.preset_bench(agents=agents)
    _kernels.warmup()

    report: dict = {
        "backend": _kernels.BACKEND,
        "cpu_count": multiprocessing.cpu_count(),
        "repeat": repeat,
    }

    tmp = None
    if corpus_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="wifisense-bench-")
        corpus_dir = tmp.name
    try:
        gen = synth.generate(config, salt, with_truth=False)
        paths = _materialize_corpus(gen, Path(corpus_dir))
        report["events"] = gen.n_events
        report["files"] = len(paths)

        best = None
        cols = sessions = None
        for _ in range(max(1, repeat)):
            cols, sessions, t_parse, t_sess = _run_pipeline(paths, gen.topology, salt, workers=1)
            if best is None or t_parse + t_sess < best[0] + best[1]:
                best = (t_parse, t_sess)
        t_parse, t_sess = best
        total = t_parse + t_sess
        report["single"] = {
            "parse_s": round(t_parse, 3),
            "sessionize_s": round(t_sess, 3),
            "total_s": round(total, 3),
            "events_per_s": int(gen.n_events / total),
            "sessions": len(sessions),
        }

        if workers > 1:
            par_total = None
            for _ in range(max(1, repeat)):
                _, _, tp, ts = _run_pipeline(paths, gen.topology, salt, workers=workers)
                if par_total is None or tp + ts < par_total:
                    par_total = tp + ts
            report["parallel"] = {
                "workers": workers,
                "total_s": round(par_total, 3),
                "events_per_s": int(gen.n_events / par_total),
                "speedup": round(total / par_total, 2),
            }

        report["kernels"] = kernel_compare(cols)
    finally:
        if tmp is not None and not keep_corpus:
            tmp.cleanup()
    return report


def kernel_compare(cols) -> dict:
    """Time the selected backend's inner loops against the plain-Python
    reference implementations on the benchmark's own event arrays."""
    order = np.lexsort((cols.ap, cols.sub, cols.ts, cols.dev))
    dev, ts = cols.dev[order], cols.ts[order]
    sub, ap = cols.sub[order], cols.ap[order]
    n = len(dev)
    out = {"events": n}

    def time_sessionize(fn):
        buf = [np.empty(n + 1, dtype=np.int64) for _ in range(4)]
        t0 = time.perf_counter()
        fn(dev, ts, sub, ap, np.int64(1800), np.int64(0), *buf)
        return time.perf_counter() - t0

    active = _kernels._sessionize_impl
    t_active = time_sessionize(active)
    out["sessionize"] = {_kernels.BACKEND: round(t_active, 4)}
    if _kernels.HAS_NUMBA:
        # cap the pure-Python reference to a slice large enough to extrapolate
        cap = min(n, 200_000)
        buf = [np.empty(cap + 1, dtype=np.int64) for _ in range(4)]
        t0 = time.perf_counter()
        _kernels._sessionize_loop(
            dev[:cap], ts[:cap], sub[:cap], ap[:cap], np.int64(1800), np.int64(0), *buf
        )
        t_py = (time.perf_counter() - t0) * (n / cap)
        out["sessionize"]["python"] = round(t_py, 4)
        out["sessionize"]["speedup"] = round(t_py / t_active, 1) if t_active > 0 else None
    return out


def render_report(report: dict) -> str:
    lines = [
        f"kernel backend: {report['backend']} (cpus: {report['cpu_count']})",
        f"corpus: {report['events']} events across {report['files']} daily files",
    ]
    s = report["single"]
    lines.append(
        f"single-threaded: {s['events_per_s']:,} events/s "
        f"(parse {s['parse_s']}s + sessionize {s['sessionize_s']}s -> {s['sessions']} sessions)"
    )
    if "parallel" in report:
        p = report["parallel"]
        lines.append(
            f"parallel x{p['workers']}: {p['events_per_s']:,} events/s (speedup {p['speedup']}x)"
        )
    k = report.get("kernels", {})
    if "sessionize" in k:
        lines.append(f"sessionize kernel: {k['sessionize']}")
    return "\n".join(lines)
