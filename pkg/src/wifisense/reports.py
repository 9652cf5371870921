"""Versioned JSON report documents shared by the CLI, service, and tests."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .analytics import EmpiricalCdf, PhaseComparison
from .model import Granularity, OccupancySeries, TransitionMatrix
from .topology import Localizer

SCHEMA_OCCUPANCY = "wifisense.occupancy/1"
SCHEMA_TRANSITIONS = "wifisense.transitions/1"
SCHEMA_CDF = "wifisense.mobility_cdf/1"
SCHEMA_COMPARE = "wifisense.phase_compare/1"
SCHEMA_HEATMAP = "wifisense.heatmap/1"


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file and rename, so interrupts never leave a torn file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _render_bucket(loc: Localizer, bucket_kind: str, b: int) -> str:
    return loc.hour_bucket_iso(b) if bucket_kind == "hour" else loc.day_iso(b)


def _parse_bucket(loc: Localizer, bucket_kind: str, text: str) -> int:
    local = loc.parse_local(text)
    return local // 3600 if bucket_kind == "hour" else local // 86400


def occupancy_doc(series: OccupancySeries, loc: Localizer) -> dict:
    per_unit: dict[str, list] = {}
    for (u, b), c in sorted(series.counts.items()):
        per_unit.setdefault(u, []).append(
            {"bucket": _render_bucket(loc, series.bucket, b), "count": c}
        )
    return {
        "schema": SCHEMA_OCCUPANCY,
        "granularity": series.granularity.value,
        "bucket": series.bucket,
        "timezone": series.timezone,
        "series": [{"unit": u, "points": pts} for u, pts in sorted(per_unit.items())],
    }


def occupancy_from_doc(doc: dict, loc: Localizer) -> OccupancySeries:
    counts = {}
    for row in doc["series"]:
        for pt in row["points"]:
            counts[(row["unit"], _parse_bucket(loc, doc["bucket"], pt["bucket"]))] = pt["count"]
    return OccupancySeries(Granularity(doc["granularity"]), doc["bucket"], counts, doc["timezone"])


def transitions_doc(matrix: TransitionMatrix, loc: Localizer) -> dict:
    units = matrix.units()
    index = {u: i for i, u in enumerate(units)}
    grid = [[0] * len(units) for _ in units]
    for (a, b), c in matrix.counts.items():
        grid[index[a]][index[b]] = c
    doc = {
        "schema": SCHEMA_TRANSITIONS,
        "scope": matrix.scope.value,
        "units": units,
        "counts": grid,
        "total": matrix.total,
    }
    if matrix.window is not None:
        doc["window"] = {
            "from": loc.hour_bucket_iso(loc.to_local(matrix.window[0]) // 3600),
            "to": loc.hour_bucket_iso(loc.to_local(matrix.window[1] - 1) // 3600 + 1),
        }
    return doc


def transitions_from_doc(doc: dict) -> TransitionMatrix:
    units = doc["units"]
    counts = {}
    for i, row in enumerate(doc["counts"]):
        for j, c in enumerate(row):
            if c:
                counts[(units[i], units[j])] = c
    return TransitionMatrix(Granularity(doc["scope"]), None, counts)


def cdf_doc(cdf: EmpiricalCdf, granularity: Granularity, quantiles=(0.5, 0.9)) -> dict:
    doc = cdf.to_doc()
    doc.update(
        {
            "schema": SCHEMA_CDF,
            "granularity": granularity.value,
            "quantiles": {str(q): cdf.quantile(q) for q in quantiles},
        }
    )
    return doc


def compare_doc(cmp: PhaseComparison) -> dict:
    units = []
    for unit, cells in sorted(cmp.units.items()):
        units.append(
            {
                "unit": unit,
                "kind": cmp.unit_kinds.get(unit),
                "phases": [
                    {
                        "phase": c.phase,
                        "mean": round(c.mean, 6),
                        "pct_change": None if c.pct_change is None else round(c.pct_change, 4),
                        "undefined": c.undefined,
                    }
                    for c in cells
                ],
            }
        )
    return {
        "schema": SCHEMA_COMPARE,
        "metric": cmp.metric,
        "granularity": cmp.granularity.value,
        "baseline": cmp.baseline,
        "units": units,
    }


def heatmap_doc(cells: list[dict], floor: str, bucket: int, loc: Localizer) -> dict:
    return {
        "schema": SCHEMA_HEATMAP,
        "floor": floor,
        "bucket": loc.hour_bucket_iso(bucket),
        "cells": cells,
    }
