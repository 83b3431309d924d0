"""Delimited text and JSON artifacts: cells, trajectories, simulation traces, plans."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .decomposition import CellGraph
from .errors import ParseError
from .high_level import HighLevelPlan
from .kinematics import SimTrace
from .low_level import SamplePoint, Trajectory
from .maps import Point

TRAJECTORY_HEADER = ["stage", "index", "x", "y", "cell_id"]
SIM_HEADER = ["t", "x", "y", "theta", "e_dist", "e_head", "v_left", "v_right"]


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps csv's \r\n out of the file; we always emit \n
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- cells -----------------------------------------------------------------------

def cells_csv(g: CellGraph) -> str:
    rows = [(c.id, repr(c.rect.x_min), repr(c.rect.y_min), repr(c.rect.x_max), repr(c.rect.y_max),
             ";".join(sorted(c.atoms)), int(c.free)) for c in g.cells]
    return _csv_text(["id", "x_min", "y_min", "x_max", "y_max", "atoms", "free"], rows)


def write_cells_csv(g: CellGraph, path) -> Path:
    return _write(path, cells_csv(g))


# -- trajectories ------------------------------------------------------------------

def trajectory_csv(traj: Trajectory) -> str:
    rows = []
    for i, w in enumerate(traj.waypoints):
        rows.append((traj.stage_of(i), i, repr(w.position.x), repr(w.position.y), w.cell))
    return _csv_text(TRAJECTORY_HEADER, rows)


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    return _write(path, trajectory_csv(traj))


def parse_trajectory_csv(text: str) -> Trajectory:
    """Inverse of ``trajectory_csv``.  Raises ParseError on any malformed row."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("trajectory CSV is empty") from None
    if [h.strip() for h in header] != TRAJECTORY_HEADER:
        raise ParseError(f"trajectory CSV header must be {','.join(TRAJECTORY_HEADER)}")
    waypoints, bounds = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRAJECTORY_HEADER):
            raise ParseError(f"line {lineno}: expected {len(TRAJECTORY_HEADER)} fields, got {len(row)}")
        try:
            stage, index, cell = int(row[0]), int(row[1]), int(row[4])
            x, y = float(row[2]), float(row[3])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError(f"line {lineno}: non-finite coordinate")
        if index != len(waypoints):
            raise ParseError(f"line {lineno}: index {index} out of sequence")
        if stage == len(bounds):
            bounds.append(index)
        elif stage != len(bounds) - 1:
            raise ParseError(f"line {lineno}: stage {stage} out of sequence")
        waypoints.append(SamplePoint(Point(x, y), cell))
    if not waypoints:
        raise ParseError("trajectory CSV has no waypoints")
    return Trajectory(tuple(waypoints), tuple(bounds))


def read_trajectory_csv(path) -> Trajectory:
    return parse_trajectory_csv(Path(path).read_text(encoding="utf-8"))


# -- simulation traces -----------------------------------------------------------

def sim_trace_csv(tr: SimTrace) -> str:
    cols = (tr.t, tr.x, tr.y, tr.theta, tr.e_distance, tr.e_heading, tr.v_left, tr.v_right)
    rows = [[repr(float(v)) for v in vals] for vals in zip(*cols)]
    text = _csv_text(SIM_HEADER, rows)
    return text + (f"# success={str(tr.success).lower()} waypoints_reached={tr.waypoints_reached}"
                   f" reason={tr.reason}\n")


def write_sim_trace_csv(tr: SimTrace, path) -> Path:
    return _write(path, sim_trace_csv(tr))


# -- plans and automata ----------------------------------------------------------

def plan_json(plan: HighLevelPlan, formula: str | None = None) -> str:
    doc = plan.to_dict()
    if formula is not None:
        doc = {"formula": formula, **doc}
    return json.dumps(doc, indent=2) + "\n"


def write_text(path, text: str) -> Path:
    return _write(path, text)
