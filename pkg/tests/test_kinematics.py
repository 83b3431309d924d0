import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltlplan.artifacts import read_trajectory_csv
from ltlplan.decomposition import decompose
from ltlplan.errors import WheelSpeedExceeded
from ltlplan.kinematics import (DiffDriveParams, PidGains, PidState, RobotState, compute_errors,
                                normalize_angle, pid_update, step, track_trajectory)
from ltlplan.low_level import SamplePoint, Trajectory
from ltlplan.ltl import accepts, compile_dfa, parse_ltl, run_dfa
from ltlplan.maps import MapSpec, Point, Rect, RegionKind, RegionSpec

from conftest import FIXTURES, SEQ4, SEQ4_SAFE

angles = st.floats(-50, 50, allow_nan=False)


def test_straight_step():
    s = step(RobotState(0, 0, 0), 1, 1, DiffDriveParams(dt=0.1, wheel_speed_max=2))
    assert (s.x, s.y, s.theta) == pytest.approx((0.1, 0, 0), abs=1e-12)


def test_rotation_step():
    s = step(RobotState(0, 0, 0), -1, 1, DiffDriveParams(wheelbase=0.5, dt=0.1, wheel_speed_max=2))
    assert (s.x, s.y) == (0, 0)
    assert s.theta == pytest.approx(0.4, abs=1e-12)


def test_heading_wraps():
    p = DiffDriveParams(wheelbase=0.5, dt=0.1, wheel_speed_max=2)
    s = RobotState(0, 0, 3.0)
    for _ in range(20):
        s = step(s, -1, 1, p)
        assert -math.pi <= s.theta < math.pi


def test_wheel_limit():
    with pytest.raises(WheelSpeedExceeded):
        step(RobotState(0, 0, 0), 2, 0, DiffDriveParams())


def test_params_validation():
    with pytest.raises(ValueError):
        DiffDriveParams(dt=0)
    with pytest.raises(ValueError):
        PidGains(kp=0, ki=0, kd=0)
    with pytest.raises(ValueError):
        PidGains(kp=-1)


def test_errors():
    assert compute_errors(RobotState(0, 0, 0), Point(1, 0)) == (1, 0, 0)
    d, _, e = compute_errors(RobotState(0, 0, math.pi / 2), Point(1, 0))
    assert d == 1 and e == pytest.approx(-math.pi / 2)
    target = Point(math.cos(-3.0), math.sin(-3.0))
    _, desired, e = compute_errors(RobotState(0, 0, 3.0), target)
    assert desired == pytest.approx(-3.0)
    assert e == pytest.approx(2 * math.pi - 6, abs=1e-12)
    assert compute_errors(RobotState(1, 1, 0.3), Point(1, 1))[1] == 0.0


def test_pid_examples():
    assert pid_update(PidState(), 0.5, 0.1, PidGains(kp=1, ki=0, kd=0))[0] == 0.5
    c = PidState()
    for _ in range(3):
        w, c = pid_update(c, 1.0, 0.1, PidGains(kp=0, ki=1, kd=0))
    assert w == pytest.approx(0.3)
    gains = PidGains(kp=0, ki=0, kd=1)
    w0, c = pid_update(PidState(), 0.0, 0.1, gains)
    w1, _ = pid_update(c, 0.2, 0.1, gains)
    assert w0 == 0 and w1 == pytest.approx(2.0)


def test_pid_antiwindup():
    c = PidState()
    for _ in range(100):
        _, c = pid_update(c, 1.0, 0.1, PidGains(kp=0, ki=1, integral_limit=0.5))
    assert c.integral == 0.5


@settings(max_examples=300)
@given(angles)
def test_normalize_range(a):
    w = normalize_angle(a)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_normalize_edge_values():
    assert normalize_angle(math.pi) == -math.pi
    assert normalize_angle(-math.pi) == -math.pi
    assert -math.pi <= normalize_angle(-1e-17) < math.pi


@settings(max_examples=200)
@given(st.floats(-1, 1), angles, st.integers(1, 50), st.floats(0.001, 0.1))
def test_straight_line(c, theta0, n, dt):
    p = DiffDriveParams(dt=dt)
    theta0 = normalize_angle(theta0)
    s = RobotState(0.0, 0.0, theta0)
    for _ in range(n):
        s = step(s, c, c, p)
    assert s.x == pytest.approx(n * c * dt * math.cos(theta0), abs=1e-9)
    assert s.y == pytest.approx(n * c * dt * math.sin(theta0), abs=1e-9)
    assert s.theta == theta0


@settings(max_examples=200)
@given(st.floats(-1, 1), angles, st.floats(-5, 5), st.floats(-5, 5))
def test_pure_rotation(c, theta0, x, y):
    s = step(RobotState(x, y, normalize_angle(theta0)), -c, c, DiffDriveParams())
    assert (s.x, s.y) == (x, y)


@settings(max_examples=200)
@given(st.floats(0.01, 20), st.floats(-math.pi, math.pi))
def test_pid_proportional_only(kp, e):
    w, _ = pid_update(PidState(integral=0.3, prev_error=-1.0), e, 0.02, PidGains(kp=kp, ki=0, kd=0))
    assert w == kp * e


def _open_map():
    m = MapSpec(Rect(0, 0, 10, 10), (RegionSpec("s", RegionKind.START, Rect(0, 0, 1, 1)),))
    return decompose(m)


def _traj(*pts):
    g = _open_map()
    return g, Trajectory(tuple(SamplePoint(Point(*p), g.locate(Point(*p))) for p in pts))


def test_track_straight_segment():
    g, traj = _traj((1, 1), (5, 1))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), g)
    assert tr.success and tr.waypoints_reached == 1
    assert max(abs(t) for t in tr.theta) < 1e-9


def test_track_timeout():
    g, traj = _traj((1, 1), (5, 1))
    p = DiffDriveParams()
    tr = track_trajectory(traj, p, PidGains(), g, waypoint_timeout=p.dt)
    assert not tr.success and tr.waypoints_reached == 0
    assert tr.reason.startswith("timed out")


def test_track_turns_in_place_first():
    g, traj = _traj((5, 5), (6, 5), (6, 7))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), g)
    assert tr.success and tr.waypoints_reached == 2
    for vl, vr in zip(tr.v_left, tr.v_right):
        assert abs(vl) <= 1.0 + 1e-12 and abs(vr) <= 1.0 + 1e-12


def test_track_detects_collision():
    m = MapSpec(Rect(0, 0, 10, 10), (RegionSpec("s", RegionKind.START, Rect(0, 0, 1, 1)),
                                     RegionSpec("o", RegionKind.OBSTACLE, Rect(3, 0, 4, 10))))
    g = decompose(m)
    traj = Trajectory((SamplePoint(Point(1, 1), g.locate(Point(1, 1))),
                       SamplePoint(Point(6, 1), g.locate(Point(6, 1)))))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), g)
    assert not tr.success and "free space" in tr.reason


def test_fixture_tracks_with_monitor(canonical, grid):
    traj = read_trajectory_csv(FIXTURES / "seq4_rrt_seed7.csv")
    d = compile_dfa(parse_ltl(SEQ4))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), grid, d)
    assert tr.success, tr.reason
    assert tr.dfa_states[-1] in d.accepting
    # the monitor's verdict is reproducible from the recorded tick cells
    assert accepts(d, [grid.label(c) for c in tr.cell_trace()])


def test_safety_fixture_never_trapped(grid_unsafe):
    traj = read_trajectory_csv(FIXTURES / "seq4_safe_rrt_seed7.csv")
    d = compile_dfa(parse_ltl(SEQ4_SAFE))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), grid_unsafe, d)
    assert tr.success, tr.reason
    states = run_dfa(d, [grid_unsafe.label(c) for c in tr.cell_trace()])
    assert d.trap not in states and states[-1] in d.accepting


def test_monitor_flags_violation():
    # corridor: start | g1 | . | us | . | g2, driven straight through
    m = MapSpec(Rect(0, 0, 6, 1), (
        RegionSpec("s", RegionKind.START, Rect(0, 0, 1, 1)),
        RegionSpec("goal1", RegionKind.GOAL, Rect(1, 0, 2, 1), "g1"),
        RegionSpec("bad", RegionKind.AVOID, Rect(3, 0, 4, 1), "us"),
        RegionSpec("goal2", RegionKind.GOAL, Rect(5, 0, 6, 1), "g2"),
    ))
    g = decompose(m)
    traj = Trajectory(tuple(SamplePoint(Point(x, 0.5), g.locate(Point(x, 0.5))) for x in (0.5, 5.5)))
    unsafe = compile_dfa(parse_ltl("F(g1 & F(g2)) & G(g1 -> X G(!us))"))
    tr = track_trajectory(traj, DiffDriveParams(), PidGains(), g, unsafe)
    assert not tr.success and "trap" in tr.reason
    assert tr.dfa_states[-1] == unsafe.trap
    assert 3 <= tr.x[-1] < 4
    ok = track_trajectory(traj, DiffDriveParams(), PidGains(), g, compile_dfa(parse_ltl("F(g1 & F(g2))")))
    assert ok.success
