"""Transition system, product with the task DFA, BFS and stage corridors."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .decomposition import CellGraph
from .errors import NoPlan, StartInObstacle
from .ltl import Dfa, dfa_step
from .maps import MapSpec


@dataclass(frozen=True)
class TransitionSystem:
    states: tuple[int, ...]
    transitions: tuple[tuple[int, int], ...]
    labeling: dict[int, frozenset[str]]
    initial: int

    def successors(self, s: int) -> list[int]:
        return self._succ.get(s, [])

    def __post_init__(self):
        succ: dict[int, list[int]] = {}
        for a, b in self.transitions:
            succ.setdefault(a, []).append(b)
        object.__setattr__(self, "_succ", {k: sorted(v) for k, v in succ.items()})


class ProductState(NamedTuple):
    ts: int
    q: int


@dataclass(frozen=True)
class Stage:
    dfa_from: int
    dfa_to: int
    cell_path: tuple[int, ...]
    allowed: frozenset[int]
    target_atoms: frozenset[str]


@dataclass(frozen=True)
class HighLevelPlan:
    stages: tuple[Stage, ...]

    def to_dict(self) -> dict:
        return {"stages": [
            {"dfa_from": s.dfa_from, "dfa_to": s.dfa_to, "cell_path": list(s.cell_path),
             "allowed": sorted(s.allowed), "target_atoms": sorted(s.target_atoms)}
            for s in self.stages]}


def build_ts(g: CellGraph, m: MapSpec) -> TransitionSystem:
    """Free cells become states; the initial state holds the start-region centroid."""
    init = g.locate(m.start.rect.centroid)
    if init is None:
        raise StartInObstacle(f"start region {m.start.name!r} centroid lies in an obstacle")
    return TransitionSystem(
        states=g.free_ids,
        transitions=g.edges,
        labeling={cid: g.label(cid) for cid in g.free_ids},
        initial=init,
    )


def product_bfs(ts: TransitionSystem, d: Dfa) -> list[ProductState]:
    """Minimum-hop path through TS x DFA to an accepting DFA state.

    The DFA reads the label of each cell as it is entered.  Staying in a cell
    is a move only when re-reading its label changes the DFA state.  Product
    states in the trap are never expanded.
    """
    label = ts.labeling
    start = ProductState(ts.initial, dfa_step(d, d.initial, label[ts.initial]))
    parent: dict[ProductState, ProductState | None] = {start: None}
    queue = deque([start])
    furthest = d.progress[start.q]
    while queue:
        cur = queue.popleft()
        if cur.q in d.accepting:
            path = []
            node = cur
            while node is not None:
                path.append(node)
                node = parent[node]
            return path[::-1]
        if cur.q == d.trap:
            continue
        furthest = max(furthest, d.progress[cur.q])
        succ = []
        stay = dfa_step(d, cur.q, label[cur.ts])
        if stay != cur.q:
            succ.append(ProductState(cur.ts, stay))
        for nxt in ts.successors(cur.ts):
            succ.append(ProductState(nxt, dfa_step(d, cur.q, label[nxt])))
        for ps in sorted(succ):
            if ps not in parent and ps.q != d.trap:
                parent[ps] = cur
                queue.append(ps)
    raise NoPlan(f"no accepting product state reachable; task stuck after {furthest} completed stage(s)",
                 furthest_state=furthest)


def _admissible(d: Dfa, q: int, lab) -> bool:
    return dfa_step(d, q, lab) == q


def extract_stages(path: list[ProductState], d: Dfa, ts: TransitionSystem,
                   inflation: int = 1) -> HighLevelPlan:
    """Cut a product path into stages wherever the DFA component changes.

    Each stage's allowed set is its cell path, every cell that completes the
    stage the same way the path did, and ``inflation`` rings of neighbouring
    cells on which the DFA stays put.
    """
    if inflation < 0:
        raise ValueError("inflation must be non-negative")
    label = ts.labeling
    qs = [d.initial] + [p.q for p in path]
    cells = [path[0].ts] + [p.ts for p in path]
    stages = []
    seg_start = 0
    for k in range(1, len(qs)):
        if qs[k] == qs[k - 1]:
            continue
        q_from, q_to = qs[k - 1], qs[k]
        cell_path = []
        for c in cells[seg_start:k + 1]:
            if not cell_path or cell_path[-1] != c:
                cell_path.append(c)
        progress_cell = cells[k]
        guard, _ = d.firing(q_from, label[progress_cell])
        targets = frozenset(guard.positive_atoms & label[progress_cell])
        allowed = set(cell_path)
        allowed |= {c for c in ts.states
                    if targets <= label[c] and dfa_step(d, q_from, label[c]) == q_to}
        for _ in range(inflation):
            ring = {n for c in allowed for n in ts.successors(c)
                    if n not in allowed and _admissible(d, q_from, label[n])}
            allowed |= ring
        stages.append(Stage(q_from, q_to, tuple(cell_path), frozenset(allowed), targets))
        seg_start = k
    return HighLevelPlan(tuple(stages))


def plan_high_level(ts: TransitionSystem, d: Dfa, inflation: int = 1) -> HighLevelPlan:
    return extract_stages(product_bfs(ts, d), d, ts, inflation)
