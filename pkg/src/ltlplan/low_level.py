"""Region-restricted RRT and PRM, stage chaining, and goal scheduling.

Collision checking is purely cell-membership based: a point is valid when it
lies in a free cell of the active allowed set, and a segment is valid when the
cells it crosses form a chain of adjacent allowed cells.

Random numbers come from numpy's PCG64 generator; every planner call gets
its own stream seeded by ``SeedSequence([rng_seed, stage_index])``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decomposition import CellGraph
from .errors import EmptyAllowedSet, PlanFailure, UnsupportedTask
from .high_level import HighLevelPlan
from .ltl import Formula, task_structure
from .maps import Point

EPS = 1e-9


@dataclass(frozen=True)
class PlannerConfig:
    max_iterations: int = 5000
    step_size: float = 0.5
    prm_nodes: int = 800
    prm_neighbors: int = 8
    goal_radius: float = 0.5
    edge_check_resolution: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1 or self.prm_neighbors < 1 or self.prm_nodes < 0:
            raise ValueError("iteration, node and neighbour counts must be positive")
        if not self.step_size > 0 or not self.goal_radius > 0:
            raise ValueError("step_size and goal_radius must be positive")
        if not 0 < self.edge_check_resolution <= self.step_size:
            raise ValueError("edge_check_resolution must lie in (0, step_size]")


@dataclass(frozen=True)
class SamplePoint:
    position: Point
    cell: int


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[SamplePoint, ...]
    stage_boundaries: tuple[int, ...] = (0,)

    def stage_of(self, index: int) -> int:
        return sum(1 for b in self.stage_boundaries if b <= index) - 1

    def cell_trace(self) -> list[int]:
        """Waypoint cells with consecutive repeats removed."""
        out = []
        for w in self.waypoints:
            if not out or out[-1] != w.cell:
                out.append(w.cell)
        return out

    def label_trace(self, g: CellGraph) -> list[frozenset[str]]:
        return [g.label(c) for c in self.cell_trace()]

    @property
    def length(self) -> float:
        pts = self.waypoints
        return sum(pts[i].position.distance(pts[i + 1].position) for i in range(len(pts) - 1))


def make_rng(seed: int, stage: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), stage])))


class _Region:
    """Allowed cell set prepared for fast sampling and membership queries."""

    def __init__(self, allowed, g: CellGraph):
        ids = sorted(c for c in allowed if 0 <= c < len(g.cells) and g.cells[c].free)
        if not ids:
            raise EmptyAllowedSet("no free cell in the allowed set")
        self.g = g
        self.ids = ids
        self.mask = np.zeros(len(g.cells), dtype=bool)
        self.mask[ids] = True
        areas = np.array([g.cells[c].rect.area for c in ids])
        self.cum = np.cumsum(areas) / areas.sum()

    def sample(self, rng: np.random.Generator) -> tuple[float, float, int]:
        g = self.g
        while True:
            k = min(int(np.searchsorted(self.cum, rng.random(), side="right")), len(self.ids) - 1)
            r = g.cells[self.ids[k]].rect
            x = r.x_min + rng.random() * r.width
            y = r.y_min + rng.random() * r.height
            # guards against x_min + u*w rounding up onto the excluded upper edge
            if g.locate(Point(x, y)) == self.ids[k]:
                return x, y, self.ids[k]

    def locate(self, x: float, y: float) -> int | None:
        c = self.g.locate(Point(x, y))
        return c if c is not None and self.mask[c] else None

    def edge_ok(self, x1, y1, c1, x2, y2, c2, resolution) -> bool:
        g = self.g
        if not (self.mask[c1] and self.mask[c2]):
            return False
        if c1 == c2:
            # cells are convex
            return True
        if (c1, c2) not in g.edge_set:
            return False
        n = max(1, math.ceil(math.hypot(x2 - x1, y2 - y1) / resolution))
        prev = c1
        for i in range(1, n + 1):
            c = g.locate(Point(x1 + (x2 - x1) * i / n, y1 + (y2 - y1) * i / n))
            if c is None or not self.mask[c]:
                return False
            if c != prev:
                if (prev, c) not in g.edge_set:
                    return False
                prev = c
        return True


def sample_in_regions(allowed, g: CellGraph, rng: np.random.Generator) -> SamplePoint:
    """Uniform sample over the union of the allowed cells (area-weighted cell choice)."""
    x, y, c = _Region(allowed, g).sample(rng)
    return SamplePoint(Point(x, y), c)


def edge_valid(p1: SamplePoint, p2: SamplePoint, allowed, g: CellGraph, resolution: float) -> bool:
    try:
        region = _Region(allowed, g)
    except EmptyAllowedSet:
        return False
    c1, c2 = g.locate(p1.position), g.locate(p2.position)
    if c1 is None or c2 is None:
        return False
    return region.edge_ok(p1.position.x, p1.position.y, c1, p2.position.x, p2.position.y, c2, resolution)


def _target_cells(region: _Region, target_atoms) -> list[int]:
    targets = frozenset(target_atoms)
    return [c for c in region.ids if targets <= region.g.cells[c].atoms]


def _approach(region, x, y, c, goal, step, resolution):
    """Points from (x, y) to ``goal`` in pieces no longer than ``step``; None if blocked."""
    gx, gy, gc = goal
    if not region.edge_ok(x, y, c, gx, gy, gc, resolution):
        return None
    n = max(1, math.ceil(math.hypot(gx - x, gy - y) / step - EPS))
    pts = []
    for i in range(1, n + 1):
        px, py = x + (gx - x) * i / n, y + (gy - y) * i / n
        pc = gc if i == n else region.g.locate(Point(px, py))
        pts.append((px, py, pc))
    return pts


def rrt_plan(start: Point, target_atoms, allowed, g: CellGraph, cfg: PlannerConfig,
             rng: np.random.Generator, edges_out: list | None = None) -> list[SamplePoint]:
    """RRT inside ``allowed``; stops as soon as a node lands in a target cell.

    The final leg to the target cell's centroid is subdivided so every tree
    edge is at most ``step_size`` long.
    """
    region = _Region(allowed, g)
    c0 = region.locate(start.x, start.y)
    if c0 is None:
        raise PlanFailure("start point is not inside the allowed cells")
    targets = _target_cells(region, target_atoms)
    if not targets:
        raise PlanFailure(f"no allowed cell carries {sorted(target_atoms)}")
    target_set = set(targets)
    cents = np.array([[g.cells[c].rect.centroid.x, g.cells[c].rect.centroid.y] for c in targets])
    step, res = cfg.step_size, cfg.edge_check_resolution

    nodes = np.empty((max(16, cfg.max_iterations + 1), 2))
    nodes[0] = (start.x, start.y)
    parents = [-1]
    cells = [c0]

    def finish(idx, goal):
        chain = []
        while idx >= 0:
            chain.append((nodes[idx, 0], nodes[idx, 1], cells[idx]))
            idx = parents[idx]
        chain.reverse()
        tail = _approach(region, *chain[-1], goal, step, res)
        if edges_out is not None:
            prev = chain[-1]
            for p in tail:
                edges_out.append(((prev[0], prev[1]), (p[0], p[1])))
                prev = p
        return [SamplePoint(Point(float(x), float(y)), int(c)) for x, y, c in chain + tail]

    def goal_of(c):
        p = g.cells[c].rect.centroid
        return (p.x, p.y, c)

    if c0 in target_set:
        return finish(0, goal_of(c0))

    for _ in range(cfg.max_iterations):
        rx, ry, _rc = region.sample(rng)
        n = len(parents)
        d2 = (nodes[:n, 0] - rx) ** 2 + (nodes[:n, 1] - ry) ** 2
        near = int(np.argmin(d2))
        dist = math.sqrt(d2[near])
        if dist < EPS:
            continue
        nx_, ny_ = nodes[near]
        if dist > step:
            rx, ry = nx_ + (rx - nx_) * step / dist, ny_ + (ry - ny_) * step / dist
        rc = region.locate(rx, ry)
        if rc is None or not region.edge_ok(nx_, ny_, cells[near], rx, ry, rc, res):
            continue
        nodes[n] = (rx, ry)
        parents.append(near)
        cells.append(rc)
        if edges_out is not None:
            edges_out.append(((float(nx_), float(ny_)), (float(rx), float(ry))))
        if rc in target_set:
            return finish(n, goal_of(rc))
        gd = np.hypot(cents[:, 0] - rx, cents[:, 1] - ry)
        k = int(np.argmin(gd))
        if gd[k] < cfg.goal_radius and region.edge_ok(rx, ry, rc, *cents[k], targets[k], res):
            return finish(n, goal_of(targets[k]))
    raise PlanFailure(f"RRT found no path within {cfg.max_iterations} iterations")


def prm_plan(start: Point, target_atoms, allowed, g: CellGraph, cfg: PlannerConfig,
             rng: np.random.Generator, edges_out: list | None = None) -> list[SamplePoint]:
    """PRM inside ``allowed``, queried with Dijkstra from ``start`` to the nearest target centroid."""
    region = _Region(allowed, g)
    c0 = region.locate(start.x, start.y)
    if c0 is None:
        raise PlanFailure("start point is not inside the allowed cells")
    targets = _target_cells(region, target_atoms)
    if not targets:
        raise PlanFailure(f"no allowed cell carries {sorted(target_atoms)}")
    if cfg.prm_nodes == 0:
        raise PlanFailure("empty roadmap (prm_nodes = 0)")
    target_set = set(targets)
    res = cfg.edge_check_resolution

    total = cfg.prm_nodes + 2
    xy = np.empty((total, 2))
    cells: list[int] = []
    adj: list[list[tuple[float, int]]] = []

    def add_node(x, y, c):
        i = len(cells)
        xy[i] = (x, y)
        cells.append(c)
        adj.append([])
        if i == 0:
            return i
        d = np.hypot(xy[:i, 0] - x, xy[:i, 1] - y)
        k = min(cfg.prm_neighbors, i)
        near = np.argpartition(d, k - 1)[:k] if k < i else np.arange(i)
        for j in sorted(near.tolist(), key=lambda j: (d[j], j)):
            xj, yj, cj = xy[j, 0], xy[j, 1], cells[j]
            fwd = region.edge_ok(x, y, c, xj, yj, cj, res)
            back = region.edge_ok(xj, yj, cj, x, y, c, res)
            if fwd:
                adj[i].append((float(d[j]), j))
            if back:
                adj[j].append((float(d[j]), i))
            if (fwd or back) and edges_out is not None:
                edges_out.append(((float(x), float(y)), (float(xj), float(yj))))
        return i

    for _ in range(cfg.prm_nodes):
        add_node(*region.sample(rng))
    s = add_node(start.x, start.y, c0)
    if c0 in target_set:
        goal_cell = c0
    else:
        goal_cell = min(targets, key=lambda c: (start.distance(g.cells[c].rect.centroid), c))
    gp = g.cells[goal_cell].rect.centroid
    t = add_node(gp.x, gp.y, goal_cell)

    dist = {s: 0.0}
    prev = {}
    heap = [(0.0, s)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == t:
            break
        for w, v in adj[u]:
            nd = d + w
            if nd < dist.get(v, math.inf) - EPS:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if t not in done:
        raise PlanFailure("start and goal lie in different roadmap components")
    order = [t]
    while order[-1] != s:
        order.append(prev[order[-1]])
    order.reverse()
    # stop at the first target cell on the way; the task stage is done there
    for i, n in enumerate(order[1:], start=1):
        if cells[n] in target_set:
            order = order[:i + 1]
            break
    path = [SamplePoint(Point(float(xy[n, 0]), float(xy[n, 1])), cells[n]) for n in order]
    last = path[-1]
    cent = g.cells[last.cell].rect.centroid
    if last.position != cent:
        path.append(SamplePoint(cent, last.cell))
    return path


PLANNERS: dict[str, Callable[..., list[SamplePoint]]] = {"rrt": rrt_plan, "prm": prm_plan}


def _chain(stages, start: Point, g: CellGraph, cfg: PlannerConfig, algo: str,
           edges_out: list | None) -> Trajectory:
    planner = PLANNERS[algo]
    waypoints: list[SamplePoint] = []
    bounds: list[int] = []
    cur = start
    for k, (targets, allowed) in enumerate(stages):
        try:
            path = planner(cur, targets, allowed, g, cfg, make_rng(cfg.rng_seed, k), edges_out)
        except (PlanFailure, EmptyAllowedSet) as exc:
            raise PlanFailure(str(exc), stage=k) from exc
        if waypoints:
            bounds.append(len(waypoints) - 1)
            waypoints.extend(path[1:])
        else:
            bounds.append(0)
            waypoints.extend(path)
        cur = path[-1].position
    return Trajectory(tuple(waypoints), tuple(bounds))


def plan_stages(plan: HighLevelPlan, start: Point, g: CellGraph, cfg: PlannerConfig,
                algo: str = "rrt", edges_out: list | None = None) -> Trajectory:
    """Realise each high-level stage in turn; stage k+1 starts where stage k ended.

    ``stage_boundaries[k]`` is the index of the waypoint stage k starts from
    (shared with the end of stage k-1).
    """
    return _chain([(s.target_atoms, s.allowed) for s in plan.stages], start, g, cfg, algo, edges_out)


def goal_schedule_plan(goals, per_stage_excluded, g: CellGraph, start: Point, cfg: PlannerConfig,
                       algo: str = "rrt", edges_out: list | None = None) -> Trajectory:
    """Visit single-atom goals in order over the whole free space minus per-stage exclusions."""
    goals = [frozenset(gs) for gs in goals]
    if any(len(gs) != 1 for gs in goals):
        raise UnsupportedTask("goal scheduling needs exactly one goal atom per stage")
    excluded = list(per_stage_excluded) or [frozenset()] * len(goals)
    if len(excluded) != len(goals):
        raise ValueError("one exclusion set per goal is required")
    free = frozenset(g.free_ids)
    stages = [(gs, free - frozenset(ex)) for gs, ex in zip(goals, excluded)]
    return _chain(stages, start, g, cfg, algo, edges_out)


def schedule_from_formula(f: Formula, g: CellGraph) -> tuple[list[frozenset[str]], list[frozenset[int]]]:
    """Goal order and exclusion sets for running ``f`` without a high-level planner.

    Only strict sequences of single atoms are expressible; a trigger-safety
    clause whose trigger is one of the goals turns into excluded cells for
    every later stage.
    """
    stages, safety = task_structure(f)
    goals = []
    for st in stages:
        if len(st) != 1 or len(st[0]) != 1:
            raise UnsupportedTask("goal scheduling cannot choose between or combine goals "
                                  f"(stage {' & '.join('||'.join(c) for c in st)})")
        goals.append(frozenset(st[0]))
    excluded = [frozenset()] * len(goals)
    if safety is not None:
        trig = safety.trigger.name
        first = next((k for k, gs in enumerate(goals) if trig in gs), None)
        if first is None:
            raise UnsupportedTask(f"safety trigger {trig!r} is not one of the scheduled goals")
        bad = frozenset(g.cells_with({safety.forbidden.name}))
        excluded = [frozenset() if k <= first else bad for k in range(len(goals))]
    return goals, excluded


def check_trajectory(traj: Trajectory, g: CellGraph, allowed_per_stage=None) -> list[str]:
    """Structural problems of a trajectory (empty list when it is well formed)."""
    problems = []
    for i, w in enumerate(traj.waypoints):
        if g.locate(w.position) != w.cell:
            problems.append(f"waypoint {i} is recorded in cell {w.cell} but lies elsewhere")
        if not g.cells[w.cell].free:
            problems.append(f"waypoint {i} is in an obstacle cell")
        if allowed_per_stage is not None:
            st = traj.stage_of(i)
            ok = w.cell in allowed_per_stage[st] or (
                st > 0 and i == traj.stage_boundaries[st] and w.cell in allowed_per_stage[st - 1])
            if not ok:
                problems.append(f"waypoint {i} leaves the allowed cells of stage {st}")
    for i in range(len(traj.waypoints) - 1):
        a, b = traj.waypoints[i].cell, traj.waypoints[i + 1].cell
        if a != b and (a, b) not in g.edge_set:
            problems.append(f"waypoints {i}->{i + 1} jump between non-adjacent cells {a}->{b}")
    return problems
