"""Sweep-line rectangular cell decomposition and 4-neighbour adjacency graph.

Every distinct x and y coordinate of the workspace and of every region edge
becomes a grid line, so each resulting cell is either fully inside or fully
outside every region.  Cell ids are dense and row-major: ``id = row * nx + col``
where rows are ordered by ``y`` and columns by ``x``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateGrid, UnknownCell
from .maps import MapSpec, Point, Rect, RegionKind


@dataclass(frozen=True)
class Cell:
    id: int
    rect: Rect
    atoms: frozenset[str]
    free: bool


@dataclass(frozen=True)
class CellGraph:
    cells: tuple[Cell, ...]
    edges: tuple[tuple[int, int], ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    @property
    def nx(self) -> int:
        return len(self.xs) - 1

    @property
    def ny(self) -> int:
        return len(self.ys) - 1

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def successors(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {c.id: [] for c in self.cells if c.free}
        for a, b in self.edges:
            out[a].append(b)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    @cached_property
    def free_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.cells if c.free)

    @cached_property
    def free_mask(self) -> np.ndarray:
        return np.array([c.free for c in self.cells], dtype=bool)

    @cached_property
    def _xs_arr(self) -> np.ndarray:
        return np.asarray(self.xs)

    @cached_property
    def _ys_arr(self) -> np.ndarray:
        return np.asarray(self.ys)

    def cell(self, cid: int) -> Cell:
        if not 0 <= cid < len(self.cells):
            raise UnknownCell(cid)
        return self.cells[cid]

    def label(self, cid: int) -> frozenset[str]:
        return self.cells[cid].atoms

    def grid_index(self, cid: int) -> tuple[int, int]:
        """(column, row) of a cell."""
        return cid % self.nx, cid // self.nx

    def locate(self, p: Point) -> int | None:
        ix = bisect_right(self.xs, p.x) - 1
        iy = bisect_right(self.ys, p.y) - 1
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            return None
        cid = iy * self.nx + ix
        return cid if self.cells[cid].free else None

    def locate_many(self, px: np.ndarray, py: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`locate`; -1 marks obstacle or out-of-workspace points."""
        ix = np.searchsorted(self._xs_arr, px, side="right") - 1
        iy = np.searchsorted(self._ys_arr, py, side="right") - 1
        inside = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        cid = np.where(inside, iy * self.nx + ix, 0)
        return np.where(inside & self.free_mask[cid], cid, -1)

    def cells_with(self, atoms) -> list[int]:
        """Free cells whose label contains every atom in ``atoms``."""
        atoms = frozenset(atoms)
        return [c.id for c in self.cells if c.free and atoms <= c.atoms]


def decompose(m: MapSpec) -> CellGraph:
    ws = m.workspace
    xs = sorted({ws.x_min, ws.x_max, *(v for r in m.regions for v in (r.rect.x_min, r.rect.x_max))})
    ys = sorted({ws.y_min, ws.y_max, *(v for r in m.regions for v in (r.rect.y_min, r.rect.y_max))})
    obstacles = [r.rect for r in m.of_kind(RegionKind.OBSTACLE)]
    labelled = [r for r in m.regions if r.atom is not None and r.kind is not RegionKind.OBSTACLE]
    nx = len(xs) - 1

    cells = []
    for iy in range(len(ys) - 1):
        for ix in range(nx):
            rect = Rect(xs[ix], ys[iy], xs[ix + 1], ys[iy + 1])
            free = not any(o.contains_rect(rect) for o in obstacles)
            atoms = frozenset(r.atom for r in labelled if free and r.rect.contains_rect(rect))
            cells.append(Cell(iy * nx + ix, rect, atoms, free))
    if not any(c.free for c in cells):
        raise DegenerateGrid("the workspace is entirely covered by obstacles")

    edges = []
    for c in cells:
        if not c.free:
            continue
        ix, iy = c.id % nx, c.id // nx
        for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < nx and 0 <= jy < len(ys) - 1 and cells[jy * nx + jx].free:
                edges.append((c.id, jy * nx + jx))
    return CellGraph(tuple(cells), tuple(sorted(edges)), tuple(xs), tuple(ys))


def locate_cell(g: CellGraph, p: Point) -> int | None:
    return g.locate(p)


def neighbors(g: CellGraph, cid: int) -> list[int]:
    if cid not in g.successors:
        raise UnknownCell(cid)
    return list(g.successors[cid])
