"""Deterministic on-disk formats: selection JSON, representative CSV, distance and elbow dumps.

Every writer produces byte-identical output for identical inputs: keys are
emitted in a fixed order, floats use ``repr`` (shortest round-trip form) and
line endings are ``\\n``.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .distance import DistanceMatrix
from .evaluation import ElbowCurve, FidelityReport
from .selection import Selection
from .timeseries import AnnualSeries, SliceGeometry

__all__ = [
    "read_selection",
    "selection_to_dict",
    "sha256_file",
    "write_distance_csv",
    "write_elbow_csv",
    "write_json",
    "write_representatives_csv",
    "write_selection",
]

ELBOW_COLUMNS = ("length_days", "k", "total_days", "objective", "status")


def write_json(path, payload) -> Path:
    path = Path(path)
    text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def selection_to_dict(selection: Selection, source: dict | None = None) -> dict:
    """``Selection.to_dict`` plus per-segment distances and an optional input description."""
    out = selection.to_dict()
    out["dist"] = [float(x) for x in selection.dist]
    if source is not None:
        out["source"] = source
    return out


def write_selection(path, selection: Selection, source: dict | None = None) -> Path:
    return write_json(path, selection_to_dict(selection, source))


def read_selection(path) -> tuple[Selection, dict | None]:
    """Load a selection JSON; returns the selection and its ``source`` block (if any)."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        g = payload["geometry"]
        geometry = SliceGeometry(s=g["s"], u=g["u"], t=g["t"])
        opt = payload["optimality"]
        assignment = np.array(payload["assignment"], dtype=np.int64)
        dist = np.array(payload["dist"], dtype=np.float64)
        weights = np.array(payload["weights"], dtype=np.float64)
        chosen = tuple(int(j) for j in payload["chosen"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not a selection file ({exc})") from exc
    if len(weights) != len(chosen) or len(assignment) != geometry.n or len(dist) != geometry.n:
        raise ValueError(f"{path}: array lengths inconsistent with geometry")
    if any(j < 0 or j >= geometry.m for j in chosen):
        raise ValueError(f"{path}: chosen index outside [0, {geometry.m})")
    for arr in (assignment, dist, weights):
        arr.setflags(write=False)
    selection = Selection(
        chosen=chosen,
        assignment=assignment,
        dist=dist,
        weights=weights,
        objective=float(payload["objective"]),
        geometry=geometry,
        optimality=opt["status"],
        lower_bound=opt.get("lower_bound"),
        method=payload.get("method", ""),
    )
    return selection, payload.get("source")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_representatives_csv(path, series: AnnualSeries, selection: Selection) -> Path:
    """One row per (chosen period, hour in period) with raw-unit feature values."""
    g = selection.geometry
    if g.t != series.hours:
        raise ValueError(f"selection built for t={g.t} but series has {series.hours} hours")
    raw = series.raw_values()
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "start_day", "start_hour", "hour_in_period", "weight", *series.feature_names])
        for r, (j, weight) in enumerate(zip(selection.chosen, selection.weights)):
            start = j * g.u
            for h in range(g.s):
                w.writerow([r, j, start, h, _cell(weight), *(_cell(x) for x in raw[start + h])])
    return path


def write_distance_csv(path, D: DistanceMatrix) -> Path:
    """Matrix dump: header ``j0..j{m-1}``, one row per segment, 17 significant digits."""
    path = Path(path)
    header = ",".join(f"j{j}" for j in range(D.m))
    np.savetxt(path, D.d, fmt="%.17g", delimiter=",", header=header, comments="", newline="\n")
    return path


def write_elbow_csv(path, curves: list[ElbowCurve]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ELBOW_COLUMNS)
        for curve in curves:
            for row in curve.rows():
                w.writerow([_cell(row[c]) for c in ELBOW_COLUMNS])
    return path


def write_fidelity(path, report: FidelityReport) -> Path:
    return write_json(path, report.to_dict())


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
