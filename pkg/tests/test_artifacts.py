import csv
import io

import pytest

from ltlplan.artifacts import (cells_csv, parse_trajectory_csv, plan_json, read_trajectory_csv,
                               sim_trace_csv, trajectory_csv)
from ltlplan.errors import ParseError
from ltlplan.high_level import plan_high_level
from ltlplan.kinematics import DiffDriveParams, PidGains, track_trajectory

from conftest import FIXTURES


def test_cells_csv(grid):
    rows = list(csv.reader(io.StringIO(cells_csv(grid))))
    assert rows[0] == ["id", "x_min", "y_min", "x_max", "y_max", "atoms", "free"]
    assert len(rows) - 1 == len(grid.cells)
    assert sum(int(r[6]) for r in rows[1:]) == len(grid.free_ids)


def test_trajectory_round_trip():
    text = (FIXTURES / "seq4_rrt_seed7.csv").read_text()
    traj = parse_trajectory_csv(text)
    assert trajectory_csv(traj) == text
    assert traj.stage_boundaries[0] == 0 and len(traj.stage_boundaries) == 4
    assert read_trajectory_csv(FIXTURES / "seq4_rrt_seed7.csv") == traj


@pytest.mark.parametrize("text", [
    "",
    "a,b,c\n",
    "stage,index,x,y,cell_id\n",
    "stage,index,x,y,cell_id\n0,0,1.0,1.0\n",
    "stage,index,x,y,cell_id\n0,0,one,1.0,13\n",
    "stage,index,x,y,cell_id\n0,1,1.0,1.0,13\n",
    "stage,index,x,y,cell_id\n1,0,1.0,1.0,13\n",
    "stage,index,x,y,cell_id\n0,0,nan,1.0,13\n",
    "stage,index,x,y,cell_id\n0,0,1.0,1.0,13\n1,1,2.0,1.0,13\n0,2,2.0,1.0,13\n",
])
def test_corrupt_trajectory_csv(text):
    with pytest.raises(ParseError):
        parse_trajectory_csv(text)


def test_sim_trace_csv(grid):
    traj = read_trajectory_csv(FIXTURES / "seq4_rrt_seed7.csv")
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), grid)
    lines = sim_trace_csv(tr).splitlines()
    assert lines[0] == "t,x,y,theta,e_dist,e_head,v_left,v_right"
    assert len(lines) == len(tr.t) + 2
    assert lines[-1].startswith("# success=true waypoints_reached=100")


def test_plan_json(ts, dfa_seq):
    text = plan_json(plan_high_level(ts, dfa_seq), "F(g1)")
    assert text.startswith('{\n  "formula": "F(g1)"')
