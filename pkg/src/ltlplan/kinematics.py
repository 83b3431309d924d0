"""Differential-drive kinematics with PID heading control.

The model is the explicit-Euler unicycle driven by two wheel speeds::

    v = (v_left + v_right) / 2          omega = (v_right - v_left) / L
    x += v cos(theta) dt                y += v sin(theta) dt
    theta = wrap(theta + omega dt)      wrap(a) = (a + pi) mod 2 pi - pi

``track_trajectory`` drives the robot through a planned trajectory and
optionally monitors the cell labels it visits with a task DFA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .decomposition import CellGraph
from .errors import WheelSpeedExceeded
from .ltl import Dfa, dfa_step
from .maps import Point

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    w = (a + math.pi) % TWO_PI - math.pi
    # (tiny negative) % 2pi can round up to exactly 2pi
    return w - TWO_PI if w >= math.pi else w


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class DiffDriveParams:
    wheelbase: float = 0.3
    v_max: float = 0.5
    wheel_speed_max: float = 1.0
    dt: float = 0.02

    def __post_init__(self):
        if min(self.wheelbase, self.v_max, self.wheel_speed_max, self.dt) <= 0:
            raise ValueError("wheelbase, speeds and dt must be positive")


@dataclass(frozen=True)
class PidGains:
    kp: float = 8.0
    ki: float = 0.0
    kd: float = 0.05
    integral_limit: float = 1.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be non-negative")
        if max(self.kp, self.ki, self.kd) <= 0:
            raise ValueError("at least one PID gain must be positive")
        if self.integral_limit <= 0:
            raise ValueError("integral_limit must be positive")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float | None = None


def step(s: RobotState, v_left: float, v_right: float, p: DiffDriveParams) -> RobotState:
    lim = p.wheel_speed_max * (1 + 1e-12)
    if abs(v_left) > lim or abs(v_right) > lim:
        raise WheelSpeedExceeded(f"wheel speeds ({v_left}, {v_right}) exceed {p.wheel_speed_max}")
    v = (v_left + v_right) / 2.0
    omega = (v_right - v_left) / p.wheelbase
    return RobotState(
        s.x + v * math.cos(s.theta) * p.dt,
        s.y + v * math.sin(s.theta) * p.dt,
        normalize_angle(s.theta + omega * p.dt),
    )


def compute_errors(s: RobotState, target: Point) -> tuple[float, float, float]:
    """(distance error, desired heading, wrapped heading error)."""
    dx, dy = target.x - s.x, target.y - s.y
    desired = math.atan2(dy, dx)  # atan2(0, 0) == 0
    return math.hypot(dx, dy), desired, normalize_angle(desired - s.theta)


def pid_update(c: PidState, error: float, dt: float, gains: PidGains) -> tuple[float, PidState]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    integral = min(max(c.integral + error * dt, -gains.integral_limit), gains.integral_limit)
    derivative = 0.0 if c.prev_error is None else (error - c.prev_error) / dt
    omega = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return omega, PidState(integral, error)


@dataclass
class SimTrace:
    t: list[float] = field(default_factory=list)
    x: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    theta: list[float] = field(default_factory=list)
    e_distance: list[float] = field(default_factory=list)
    e_heading: list[float] = field(default_factory=list)
    v_left: list[float] = field(default_factory=list)
    v_right: list[float] = field(default_factory=list)
    cells: list[int] = field(default_factory=list)
    success: bool = False
    waypoints_reached: int = 0
    reason: str = ""
    dfa_states: list[int] = field(default_factory=list)

    def record(self, t, s, e_d, e_h, vl, vr, cell):
        self.t.append(t)
        self.x.append(s.x)
        self.y.append(s.y)
        self.theta.append(s.theta)
        self.e_distance.append(e_d)
        self.e_heading.append(e_h)
        self.v_left.append(vl)
        self.v_right.append(vr)
        self.cells.append(-1 if cell is None else cell)

    def cell_trace(self) -> list[int]:
        out = []
        for c in self.cells:
            if not out or out[-1] != c:
                out.append(c)
        return out


def track_trajectory(traj, p: DiffDriveParams, gains: PidGains, g: CellGraph,
                     d: Dfa | None = None, goal_radius: float = 0.05,
                     waypoint_timeout: float = 60.0,
                     heading_threshold: float = math.pi / 4) -> SimTrace:
    """Follow the waypoints of ``traj`` and report whether execution succeeded.

    Each tick the PID turns the heading error into an angular rate; the robot
    drives at ``v_max`` when roughly aligned (``|e_heading| < heading_threshold``)
    and otherwise rotates in place.  Wheel commands are scaled down together
    when either exceeds ``wheel_speed_max``.  A waypoint counts as reached
    within ``goal_radius``; each waypoint must be reached within
    ``waypoint_timeout`` seconds.

    The run fails if the robot enters an obstacle cell or leaves the
    workspace, or (with ``d``) if the DFA reading the visited cell labels
    enters its trap or does not end accepting.
    """
    pts = [w.position for w in traj.waypoints]
    trace = SimTrace()
    if not pts:
        trace.reason = "empty trajectory"
        return trace
    heading = 0.0
    for q in pts[1:]:
        if q != pts[0]:
            heading = math.atan2(q.y - pts[0].y, q.x - pts[0].x)
            break
    s = RobotState(pts[0].x, pts[0].y, heading)
    max_ticks = max(1, math.ceil(waypoint_timeout / p.dt - 1e-9))

    cell = g.locate(Point(s.x, s.y))
    q = None
    if d is not None:
        q = d.initial if cell is None else dfa_step(d, d.initial, g.label(cell))
        trace.dfa_states.append(q)
    e_d, _, e_h = compute_errors(s, pts[min(1, len(pts) - 1)])
    trace.record(0.0, s, e_d, e_h, 0.0, 0.0, cell)
    if cell is None:
        trace.reason = "trajectory starts outside free space"
        return trace

    target, ticks, pid, t = 1, 0, PidState(), 0.0
    tick_count = 0
    while target < len(pts):
        e_d, _, e_h = compute_errors(s, pts[target])
        if e_d < goal_radius:
            target += 1
            trace.waypoints_reached += 1
            ticks, pid = 0, PidState()
            continue
        if ticks >= max_ticks:
            trace.reason = f"timed out on waypoint {target}"
            return trace
        omega, pid = pid_update(pid, e_h, p.dt, gains)
        v = p.v_max if abs(e_h) < heading_threshold else 0.0
        vl, vr = v - omega * p.wheelbase / 2, v + omega * p.wheelbase / 2
        peak = max(abs(vl), abs(vr))
        if peak > p.wheel_speed_max:
            vl, vr = vl * p.wheel_speed_max / peak, vr * p.wheel_speed_max / peak
        s = step(s, vl, vr, p)
        ticks += 1
        tick_count += 1
        t = tick_count * p.dt
        new_cell = g.locate(Point(s.x, s.y))
        trace.record(t, s, e_d, e_h, vl, vr, new_cell)
        if new_cell is None:
            trace.reason = f"left free space at t={t:.2f}"
            return trace
        if new_cell != cell:
            cell = new_cell
            if d is not None:
                q = dfa_step(d, q, g.label(cell))
                trace.dfa_states.append(q)
                if q == d.trap:
                    trace.reason = f"task violated (DFA trap) at t={t:.2f}"
                    return trace
    if d is not None and q not in d.accepting:
        trace.reason = "all waypoints reached but the task DFA did not accept"
        return trace
    trace.success = True
    trace.reason = "ok"
    return trace
