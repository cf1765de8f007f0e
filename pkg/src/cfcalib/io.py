"""Trajectory CSV files, parameter/Pareto documents and run manifests.

Trajectory CSV columns: ``time_s,lead_speed_mps,follower_speed_mps,spacing_m``;
the last two may be left empty (lead-only profiles).

Parameter and Pareto files share one layout: ``key = value`` header lines,
a blank line, then a CSV table. Parameter tables are ``name,value,unit``;
Pareto tables are ``s_e_m,v_e_mps,<parameter names...>`` sorted by spacing
error. Floats are written with ``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .engine import Trajectory
from .models import ModelParams, params_class

TRAJECTORY_COLUMNS = ("time_s", "lead_speed_mps", "follower_speed_mps", "spacing_m")
DT_TOLERANCE = 1e-6


class TrajectoryFileError(ValueError):
    pass


class HeaderError(TrajectoryFileError):
    pass


class NonMonotoneTimeError(TrajectoryFileError):
    pass


class InconsistentStepError(TrajectoryFileError):
    pass


class DocumentError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_trajectory(traj: Trajectory, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        times = traj.time
        for i in range(len(traj)):
            w.writerow([
                _fmt(times[i]),
                _fmt(traj.lead_speed[i]),
                "" if traj.follower_speed is None else _fmt(traj.follower_speed[i]),
                "" if traj.spacing is None else _fmt(traj.spacing[i]),
            ])


def _optional_column(rows: list[list[str]], j: int, name: str, path) -> np.ndarray | None:
    cells = [r[j].strip() if j < len(r) else "" for r in rows]
    filled = [c != "" for c in cells]
    if not any(filled):
        return None
    if not all(filled):
        raise TrajectoryFileError(f"{path}: column {name} is only partly filled")
    return np.array([float(c) for c in cells])


def read_trajectory(path) -> Trajectory:
    """Parse a trajectory CSV.

    Raises:
        HeaderError: the header is not the expected column list.
        NonMonotoneTimeError: time stamps do not strictly increase.
        InconsistentStepError: time steps vary by more than 1e-6 s.
        TrajectoryFileError: any other malformed content.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise HeaderError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if tuple(header[:2]) != TRAJECTORY_COLUMNS[:2] or \
            tuple(header) != TRAJECTORY_COLUMNS[:len(header)]:
        raise HeaderError(f"{path}: expected header {','.join(TRAJECTORY_COLUMNS)}, got {','.join(header)}")
    body = rows[1:]
    if len(body) < 2:
        raise TrajectoryFileError(f"{path}: need at least two samples")
    try:
        time = np.array([float(r[0]) for r in body])
        lead = np.array([float(r[1]) for r in body])
        follower = _optional_column(body, 2, "follower_speed_mps", path) if len(header) > 2 else None
        spacing = _optional_column(body, 3, "spacing_m", path) if len(header) > 3 else None
    except (ValueError, IndexError) as exc:
        raise TrajectoryFileError(f"{path}: malformed row ({exc})") from None
    steps = np.diff(time)
    if np.any(steps <= 0):
        bad = int(np.flatnonzero(steps <= 0)[0]) + 2
        raise NonMonotoneTimeError(f"{path}: time does not increase at data row {bad}")
    dt = float(np.median(steps))
    if np.any(np.abs(steps - dt) > DT_TOLERANCE):
        bad = int(np.flatnonzero(np.abs(steps - dt) > DT_TOLERANCE)[0]) + 2
        raise InconsistentStepError(f"{path}: time step at data row {bad} deviates from dt={dt:g}")
    # snap to the grid the writer used, e.g. 0.1 rather than 0.09999999999999787
    dt = float(_fmt(dt)) if abs(float(_fmt(dt)) - dt) <= DT_TOLERANCE else dt
    try:
        return Trajectory(dt=dt, t0=float(time[0]), lead_speed=lead,
                          follower_speed=follower, spacing=spacing)
    except ValueError as exc:
        raise TrajectoryFileError(f"{path}: {exc}") from None


# --- key/value documents --------------------------------------------------------


def _format_value(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return str(v)


def write_document(path, meta: Mapping[str, Any], columns: list[str], rows: list[list[Any]]) -> None:
    buf = io.StringIO()
    for key, value in meta.items():
        if "=" in key or "\n" in key:
            raise DocumentError(f"invalid key {key!r}")
        buf.write(f"{key} = {_format_value(value)}\n")
    buf.write("\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_document(path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    head, sep, table = text.partition("\n\n")
    if not sep:
        raise DocumentError(f"{path}: missing blank line between header and table")
    meta: dict[str, str] = {}
    for line in head.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise DocumentError(f"{path}: header line without '=': {line!r}")
        meta[key.strip()] = value.strip()
    rows = [r for r in csv.reader(io.StringIO(table)) if r]
    if not rows:
        raise DocumentError(f"{path}: empty table")
    return meta, rows[0], rows[1:]


def write_params(path, params: ModelParams, meta: Mapping[str, Any] | None = None) -> None:
    header = {"document": "parameters", "model": params.kind}
    header.update(meta or {})
    rows = [[name, float(getattr(params, name)), params.units[name]] for name in params.names()]
    write_document(path, header, ["name", "value", "unit"], rows)


def read_params(path) -> tuple[ModelParams, dict[str, str]]:
    meta, columns, rows = read_document(path)
    if columns[:2] != ["name", "value"]:
        raise DocumentError(f"{path}: parameter table needs name,value columns")
    if "model" not in meta:
        raise DocumentError(f"{path}: missing model key")
    cls = params_class(meta["model"])
    values = {r[0]: float(r[1]) for r in rows}
    missing = [n for n in cls.names() if n not in values]
    if missing:
        raise DocumentError(f"{path}: missing parameters {missing}")
    return cls(**{n: values[n] for n in cls.names()}), meta


def write_pareto(path, pareto, meta: Mapping[str, Any] | None = None) -> None:
    header = {"document": "pareto", "model": pareto.kind, "size": len(pareto.candidates),
              "params": list(pareto.names),
              "units": [params_class(pareto.kind).units[n] for n in pareto.names]}
    header.update(meta or {})
    rows = [[c.objectives.s_e, c.objectives.v_e, *(float(x) for x in c.params)]
            for c in pareto.candidates]
    write_document(path, header, ["s_e_m", "v_e_mps", *pareto.names], rows)


def read_pareto(path) -> tuple[dict[str, str], list[str], np.ndarray]:
    meta, columns, rows = read_document(path)
    if columns[:2] != ["s_e_m", "v_e_mps"]:
        raise DocumentError(f"{path}: Pareto table must start with s_e_m,v_e_mps")
    data = np.array([[float(x) for x in r] for r in rows]) if rows else np.empty((0, len(columns)))
    return meta, columns, data


def write_manifest(path, manifest: Mapping[str, Any]) -> None:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, Path):
            return str(o)
        raise TypeError(type(o).__name__)

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return str(o)
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    Path(path).write_text(json.dumps(clean(dict(manifest)), indent=2, default=default) + "\n",
                          encoding="utf-8")
