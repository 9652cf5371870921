"""Operator command line: ingest, profile, analyze, generate, serve, verify.

Exit codes: 0 success, 1 data error (structured JSON diagnostic on stderr),
2 usage error. The hashing salt is never accepted as a flag value; it comes
from an environment variable or a secret file so process listings cannot
leak it.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
import tempfile
from pathlib import Path

from . import analytics, reports, synth
from .errors import WifisenseError
from .ingest import ingest_files, redact_macs, write_quarantine
from .model import Granularity, PhaseConfig, Role, load_phases
from .profiler import (
    ProfilePolicy,
    classify_all,
    load_auth_summaries,
    load_profiles,
    save_auth_events,
    save_profiles,
)
from .sessions import DedupePolicy, SessionPolicy, SessionSet, dedupe_devices
from .topology import load_topology


class DataError(Exception):
    def __init__(self, code: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra


def _fail(code: str, message: str, **extra) -> None:
    raise DataError(code, message, **extra)


def _emit_diagnostic(err: DataError) -> None:
    rec = {"code": err.code, "message": redact_macs(str(err))}
    rec.update(err.extra)
    print(json.dumps(rec), file=sys.stderr)


def _read_salt(args) -> bytes:
    if getattr(args, "salt_file", None):
        data = Path(args.salt_file).read_bytes().strip()
        if not data:
            _fail("empty_salt", f"salt file {args.salt_file} is empty")
        return data
    env = getattr(args, "salt_env", "WIFISENSE_SALT")
    value = os.environ.get(env, "")
    if not value:
        _fail("missing_salt", f"set the {env} environment variable or pass --salt-file")
    return value.encode("utf-8")


def _load_topology_arg(args):
    try:
        return load_topology(Path(args.topology))
    except FileNotFoundError:
        _fail("missing_file", f"topology file not found: {args.topology}")
    except WifisenseError as exc:
        _fail("bad_topology", str(exc))


def _parse_window(args, topology):
    frm, to = getattr(args, "from_", None), getattr(args, "to", None)
    if frm is None and to is None:
        return None
    if frm is None or to is None:
        _fail("bad_range", "provide both --from and --to or neither")
    loc = topology.localizer
    lo, hi = loc.parse_instant(frm), loc.parse_instant(to)
    if hi <= lo:
        _fail("bad_range", "--to must be after --from")
    return (lo, hi)


def _phase_window(topology, phases: PhaseConfig, name: str):
    loc = topology.localizer
    lo, hi = phases[name].day_range
    return (int(loc.from_local(lo * 86400)), int(loc.from_local(hi * 86400)))


def _roles_arg(args):
    if not getattr(args, "roles", None):
        return None, None
    roles = {Role(r) for r in args.roles.split(",")}
    if not getattr(args, "profiles", None):
        _fail("missing_profiles", "--roles needs --profiles to resolve device roles")
    return roles, load_profiles(args.profiles)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    topology = _load_topology_arg(args)
    salt = _read_salt(args)
    base = dt.date.fromisoformat(args.base_date) if args.base_date else None
    if args.logs == ["-"]:
        if base is None:
            _fail("bad_input", "reading from stdin requires --base-date")
        from .ingest import IngestContext, ingest_lines

        cols = ingest_lines(
            (line.rstrip("\n") for line in sys.stdin),
            IngestContext(base, salt, topology),
            source="stdin",
        )
    else:
        try:
            cols = ingest_files(
                args.logs, topology, salt, base_date=base, workers=args.workers
            )
        except ValueError as exc:
            _fail("bad_input", str(exc))
    if cols.quarantined:
        if args.quarantine:
            write_quarantine(cols.quarantined, args.quarantine)
        else:
            first = cols.quarantined[0]
            _fail(
                "quarantined_events",
                f"{len(cols.quarantined)} events could not be normalized; first at "
                f"{first.source or 'input'}:{first.line_number} ({first.reason}); "
                "pass --quarantine to divert them",
                line_number=first.line_number,
                reason=first.reason,
            )
    policy = SessionPolicy(idle_timeout=args.idle_timeout)
    sessions = SessionSet.from_events(cols, policy)
    if args.drop_static:
        trajs = dedupe_devices(
            sessions.to_trajectories(topology).values(), DedupePolicy(drop_static=True)
        )
        sessions = SessionSet.from_trajectories(trajs, topology)
    _atomic_save(sessions, args.out, topology)
    if args.auth_out:
        save_auth_events(cols, topology, args.auth_out)
    print(
        f"ingested {len(cols)} events -> {len(sessions)} sessions "
        f"({len(cols.quarantined)} quarantined)"
    )
    return 0


def _atomic_save(sessions: SessionSet, out: str, topology) -> None:
    out_path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=out_path.parent or Path("."), prefix=f".{out_path.name}.")
    os.close(fd)
    try:
        sessions.save(tmp, topology)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_profile(args) -> int:
    topology = _load_topology_arg(args)
    sessions = SessionSet.load(args.sessions, topology)
    semester = None
    if args.semester:
        try:
            lo, hi = args.semester.split(":")
            semester = (dt.date.fromisoformat(lo), dt.date.fromisoformat(hi))
        except ValueError:
            _fail("bad_semester", "--semester expects YYYY-MM-DD:YYYY-MM-DD")
    auths = load_auth_summaries(args.auth, semester)
    policy = ProfilePolicy(visitor_max_days=args.visitor_max_days)
    profiles = classify_all(sessions, auths, topology, semester, policy)
    save_profiles(profiles, args.out)
    print(f"profiled {len(profiles)} devices -> {args.out}")
    return 0


def cmd_occupancy(args) -> int:
    topology = _load_topology_arg(args)
    sessions = SessionSet.load(args.sessions, topology)
    roles, profiles = _roles_arg(args)
    window = _parse_window(args, topology)
    series = analytics.occupancy(
        sessions,
        topology,
        Granularity(args.granularity),
        window=window,
        role_filter=roles,
        profiles=profiles,
        bucket=args.bucket,
    )
    reports.write_json(args.out, reports.occupancy_doc(series, topology.localizer))
    print(f"occupancy: {len(series.counts)} (unit, bucket) cells -> {args.out}")
    return 0


def cmd_transitions(args) -> int:
    topology = _load_topology_arg(args)
    sessions = SessionSet.load(args.sessions, topology)
    roles, profiles = _roles_arg(args)
    window = _parse_window(args, topology)
    matrix = analytics.transition_matrix(
        sessions,
        topology,
        Granularity(args.scope),
        window=window,
        role_filter=roles,
        profiles=profiles,
        min_dwell=args.min_dwell,
    )
    reports.write_json(args.out, reports.transitions_doc(matrix, topology.localizer))
    print(f"transitions: {matrix.total} movements -> {args.out}")
    return 0


def cmd_mobility(args) -> int:
    topology = _load_topology_arg(args)
    sessions = SessionSet.load(args.sessions, topology)
    roles, profiles = _roles_arg(args)
    if args.phase:
        if not args.phases:
            _fail("missing_phases", "--phase needs --phases")
        phases = load_phases(Path(args.phases))
        window = _phase_window(topology, phases, args.phase)
    else:
        window = _parse_window(args, topology)
    counts = analytics.unique_place_counts(
        sessions,
        topology,
        Granularity(args.granularity),
        window=window,
        min_dwell=args.min_dwell,
        role_filter=roles,
        profiles=profiles,
    )
    if not counts:
        _fail("empty_population", "no qualified visits in the requested window")
    cdf = analytics.mobility_cdf(counts)
    doc = reports.cdf_doc(cdf, Granularity(args.granularity))
    if args.per_device:
        doc["per_device"] = dict(sorted(counts.items()))
    reports.write_json(args.out, doc)
    print(
        f"mobility: {cdf.n} devices, median {cdf.quantile(0.5)}, p90 {cdf.quantile(0.9)} -> {args.out}"
    )
    return 0


def cmd_compare(args) -> int:
    topology = _load_topology_arg(args)
    sessions = SessionSet.load(args.sessions, topology)
    phases = load_phases(Path(args.phases))
    if args.baseline not in phases.names():
        _fail("bad_baseline", f"baseline {args.baseline!r} not among phases {phases.names()}")
    roles, profiles = _roles_arg(args)
    if args.metric == "occupancy":
        series = analytics.occupancy(
            sessions,
            topology,
            Granularity(args.granularity),
            role_filter=roles,
            profiles=profiles,
            bucket=args.bucket,
        )
        cmp = analytics.phase_compare(series, phases, args.baseline, topology)
    else:
        totals = analytics.phase_transition_totals(
            sessions,
            topology,
            Granularity(args.granularity),
            phases,
            min_dwell=args.min_dwell,
            role_filter=roles,
            profiles=profiles,
        )
        cmp = analytics.compare_transition_totals(
            totals, phases, args.baseline, Granularity(args.granularity)
        )
    reports.write_json(args.out, reports.compare_doc(cmp))
    print(f"compared {len(cmp.units)} units against {args.baseline} -> {args.out}")
    return 0


def cmd_generate(args) -> int:
    if args.preset:
        kwargs = {}
        if args.scale is not None:
            kwargs["scale"] = args.scale
        if args.seed is not None:
            kwargs["seed"] = args.seed
        try:
            config = synth.preset(args.preset, **kwargs)
        except TypeError:
            _fail("bad_preset_arg", f"preset {args.preset!r} does not take those overrides")
    elif args.scenario:
        config = synth.ScenarioConfig.from_doc(reports.read_json(args.scenario))
    else:
        _fail("missing_scenario", "pass --preset NAME or --scenario FILE")
    salt = _read_salt(args)
    gen = synth.generate(config, salt, with_truth=not args.no_truth)
    synth.write_outputs(gen, args.out, include_truth=not args.no_truth)
    print(f"generated {gen.n_events} events across {len(gen.day_files)} days -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, run

    host, _, port = args.bind.rpartition(":")
    config = ServiceConfig(
        topology_path=args.topology,
        sessions_path=args.sessions,
        thresholds_path=args.thresholds,
        profiles_path=args.profiles,
        token=os.environ.get(args.token_env) if args.token_env else None,
        refresh_interval=args.refresh_interval,
    )
    run(config, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_verify(args) -> int:
    salt = _read_salt(args)
    config = synth.preset(args.preset)
    config.loss = synth.LossModel()  # exactness only holds with zero loss
    gen = synth.generate(config, salt)
    with tempfile.TemporaryDirectory(prefix="wifisense-verify-") as tmp:
        outdir = Path(tmp)
        synth.write_outputs(gen, outdir)
        paths = sorted((outdir / "logs").glob("*.log"))
        cols = ingest_files(paths, gen.topology, salt)
        sessions = SessionSet.from_events(cols)
        failures = []

        pipe_rows = sorted(
            (sessions.devices[int(d)], gen.topology.ap_ids[int(a)], int(s), int(e))
            for d, a, s, e in zip(sessions.dev, sessions.ap, sessions.start, sessions.end)
        )
        truth_rows = sorted(gen.truth_sessions)
        _check(failures, "sessions", pipe_rows == truth_rows,
               f"{len(pipe_rows)} pipeline vs {len(truth_rows)} truth rows")

        for g in ("Area", "Building"):
            series = analytics.occupancy(sessions, gen.topology, Granularity(g))
            _check(failures, f"occupancy[{g}]", series.counts == gen.truth.occupancy_hour[g],
                   f"{len(series.counts)} cells")

        for p in gen.phases:
            w = _phase_window(gen.topology, gen.phases, p.name)
            m = analytics.transition_matrix(sessions, gen.topology, Granularity.BUILDING, window=w)
            _check(failures, f"transitions[{p.name}]",
                   m.counts == gen.truth.transitions_building[p.name], f"{m.total} total")
            counts = analytics.unique_place_counts(
                sessions, gen.topology, Granularity.AREA, window=w
            )
            _check(failures, f"unique_places[{p.name}]",
                   counts == gen.truth.unique_places_area[p.name], f"{len(counts)} devices")

    if failures:
        _fail("verify_mismatch", f"{len(failures)} checks failed: {', '.join(failures)}")
    print("verify: all checks passed")
    return 0


def _check(failures: list, name: str, ok: bool, detail: str) -> None:
    print(f"  {'ok ' if ok else 'FAIL'} {name} ({detail})")
    if not ok:
        failures.append(name)


def cmd_bench(args) -> int:
    from . import bench

    report = bench.run_benchmark(
        events_target=args.events, workers=args.workers, corpus_dir=args.corpus, repeat=args.repeat
    )
    print(bench.render_report(report))
    if args.out:
        reports.write_json(args.out, report)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wifisense",
        description="Passive WiFi-sensing analytics: occupancy and mobility from AP logs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_salt(sp):
        sp.add_argument("--salt-env", default="WIFISENSE_SALT",
                        help="environment variable holding the hashing salt")
        sp.add_argument("--salt-file", help="file holding the hashing salt")

    sp = sub.add_parser("ingest", help="parse raw AP logs into the session store")
    sp.add_argument("logs", nargs="+", help="daily syslog files, or '-' for standard input")
    sp.add_argument("--topology", required=True)
    sp.add_argument("--out", required=True, help="session store CSV to write")
    sp.add_argument("--auth-out", help="authentication sidecar CSV to write")
    sp.add_argument("--base-date", help="date of the first file (YYYY-MM-DD) when not in its name")
    sp.add_argument("--quarantine", help="divert unusable lines to this JSONL file")
    sp.add_argument("--idle-timeout", type=int, default=1800)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--drop-static", action="store_true",
                    help="drop always-on single-AP devices (printers, desktops)")
    add_salt(sp)
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("profile", help="classify devices into user groups")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--auth", required=True, help="authentication sidecar from ingest")
    sp.add_argument("--topology", required=True)
    sp.add_argument("--semester", help="YYYY-MM-DD:YYYY-MM-DD window for login counting")
    sp.add_argument("--visitor-max-days", type=int, default=3)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_profile)

    def add_report_common(sp, scope_flag: str, default_scope: str):
        sp.add_argument("--sessions", required=True)
        sp.add_argument("--topology", required=True)
        sp.add_argument(scope_flag, dest=scope_flag.strip("-").replace("-", "_"),
                        default=default_scope, choices=[g.value for g in Granularity])
        sp.add_argument("--from", dest="from_", help="local ISO start (inclusive)")
        sp.add_argument("--to", help="local ISO end (exclusive)")
        sp.add_argument("--roles", help="comma-separated role filter")
        sp.add_argument("--profiles", help="profile store for --roles")
        sp.add_argument("--out", required=True)

    sp = sub.add_parser("occupancy", help="distinct devices per unit per bucket")
    add_report_common(sp, "--granularity", "Area")
    sp.add_argument("--bucket", choices=["hour", "day"], default="hour")
    sp.set_defaults(fn=cmd_occupancy)

    sp = sub.add_parser("transitions", help="movement counts between units (chord-ready)")
    add_report_common(sp, "--scope", "Building")
    sp.add_argument("--min-dwell", type=int, default=None,
                    help="seconds a stay must last to qualify (default 180, 0 at AP scope)")
    sp.set_defaults(fn=cmd_transitions)

    sp = sub.add_parser("mobility", help="unique places per device; empirical CDF")
    add_report_common(sp, "--granularity", "Area")
    sp.add_argument("--min-dwell", type=int, default=None)
    sp.add_argument("--phases", help="phase document (with --phase)")
    sp.add_argument("--phase", help="restrict to one named phase")
    sp.add_argument("--per-device", action="store_true", help="include per-device counts")
    sp.set_defaults(fn=cmd_mobility)

    sp = sub.add_parser("compare", help="per-phase percentage change vs a baseline")
    add_report_common(sp, "--granularity", "Building")
    sp.add_argument("--phases", required=True)
    sp.add_argument("--baseline", required=True)
    sp.add_argument("--metric", choices=["occupancy", "transitions"], default="occupancy")
    sp.add_argument("--bucket", choices=["hour", "day"], default="hour")
    sp.add_argument("--min-dwell", type=int, default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("generate", help="synthesize a campus scenario with ground truth")
    sp.add_argument("--preset", choices=sorted(synth.PRESETS))
    sp.add_argument("--scenario", help="scenario config JSON")
    sp.add_argument("--scale", type=float, help="occupancy scale override (lockdown preset)")
    sp.add_argument("--seed", type=int, help="seed override")
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-truth", action="store_true", help="skip ground-truth files")
    add_salt(sp)
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("serve", help="start the HTTP occupancy service")
    sp.add_argument("--topology", required=True)
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--thresholds")
    sp.add_argument("--profiles")
    sp.add_argument("--bind", default="127.0.0.1:8080")
    sp.add_argument("--refresh-interval", type=float, default=60.0)
    sp.add_argument("--token-env", default="WIFISENSE_TOKEN")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("verify", help="generate a preset, run the pipeline, diff ground truth")
    sp.add_argument("--preset", default="lunch-rush", choices=sorted(synth.PRESETS))
    add_salt(sp)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("bench", help="measure ingest+sessionize throughput")
    sp.add_argument("--events", type=int, default=1_000_000)
    sp.add_argument("--repeat", type=int, default=2)
    sp.add_argument("--workers", type=int, default=4)
    sp.add_argument("--corpus", help="directory to build the corpus in (kept)")
    sp.add_argument("--out", help="write the JSON report here")
    sp.set_defaults(fn=cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DataError as exc:
        _emit_diagnostic(exc)
        return 1
    except WifisenseError as exc:
        _emit_diagnostic(DataError(type(exc).__name__, str(exc)))
        return 1


if __name__ == "__main__":
    sys.exit(main())
