"""Workspace geometry, typed regions and the JSON map document."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError, ValidationError

ATOM_RE = re.compile(r"[a-z][a-z0-9]*\Z")


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"non-finite point ({self.x}, {self.y})")

    def distance(self, other: Point) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class Rect:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite rectangle {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"rectangle {vals} has no area")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def centroid(self) -> Point:
        return Point((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    def contains_rect(self, other: Rect) -> bool:
        return (self.x_min <= other.x_min and other.x_max <= self.x_max
                and self.y_min <= other.y_min and other.y_max <= self.y_max)

    def overlap_area(self, other: Rect) -> float:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        return w * h if w > 0 and h > 0 else 0.0


def point_in_rect(p: Point, r: Rect) -> bool:
    """Half-open membership: lower edges belong to the rectangle, upper edges do not."""
    return r.x_min <= p.x < r.x_max and r.y_min <= p.y < r.y_max


class RegionKind(enum.Enum):
    START = "start"
    GOAL = "goal"
    OBSTACLE = "obstacle"
    AVOID = "avoid"


@dataclass(frozen=True)
class RegionSpec:
    name: str
    kind: RegionKind
    rect: Rect
    atom: str | None = None


@dataclass(frozen=True)
class MapSpec:
    workspace: Rect
    regions: tuple[RegionSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        _validate(self)

    @property
    def start(self) -> RegionSpec:
        return next(r for r in self.regions if r.kind is RegionKind.START)

    def of_kind(self, kind: RegionKind) -> list[RegionSpec]:
        return [r for r in self.regions if r.kind is kind]

    @property
    def atoms(self) -> set[str]:
        return {r.atom for r in self.regions if r.atom is not None}

    @property
    def goal_atoms(self) -> set[str]:
        return {r.atom for r in self.of_kind(RegionKind.GOAL)}


def _validate(m: MapSpec) -> None:
    starts = m.of_kind(RegionKind.START)
    if len(starts) != 1:
        raise ValidationError(f"expected exactly one start region, found {len(starts)}")
    names, atoms, obstacle_rects = set(), set(), set()
    for r in m.regions:
        if r.name in names:
            raise ValidationError(f"duplicate region name {r.name!r}")
        names.add(r.name)
        if not m.workspace.contains_rect(r.rect):
            raise ValidationError(f"region {r.name!r} extends outside the workspace")
        if r.kind in (RegionKind.GOAL, RegionKind.AVOID) and r.atom is None:
            raise ValidationError(f"{r.kind.value} region {r.name!r} needs an atom")
        if r.atom is not None:
            if not ATOM_RE.match(r.atom):
                raise ValidationError(f"bad atom name {r.atom!r}")
            if r.atom in atoms:
                raise ValidationError(f"duplicate atom {r.atom!r}")
            atoms.add(r.atom)
        if r.kind is RegionKind.OBSTACLE:
            if r.rect in obstacle_rects:
                raise ValidationError(f"duplicate obstacle rectangle in {r.name!r}")
            obstacle_rects.add(r.rect)
    for goal in m.of_kind(RegionKind.GOAL):
        for obs in m.of_kind(RegionKind.OBSTACLE):
            if goal.rect.overlap_area(obs.rect) > 0:
                raise ValidationError(f"goal {goal.name!r} overlaps obstacle {obs.name!r}")
    for avoid in m.of_kind(RegionKind.AVOID):
        if avoid.rect.overlap_area(starts[0].rect) > 0:
            raise ValidationError(f"avoid region {avoid.name!r} overlaps the start region")


# -- map document ------------------------------------------------------------

_RECT_KEYS = {"x_min", "y_min", "x_max", "y_max"}
_REGION_KEYS = {"name", "kind", "rect", "atom"}


def _rect_from(obj, where: str) -> Rect:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if set(obj) != _RECT_KEYS:
        raise ParseError(f"{where}: expected keys {sorted(_RECT_KEYS)}, got {sorted(obj)}")
    vals = {}
    for k in _RECT_KEYS:
        v = obj[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{where}.{k}: expected a number")
        vals[k] = float(v)
    return Rect(**vals)


def load_map(text: str) -> MapSpec:
    """Parse and validate a map document (JSON)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"map document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("map document must be a JSON object")
    extra = set(doc) - {"workspace", "regions"}
    if extra or "workspace" not in doc or "regions" not in doc:
        raise ParseError(f"map document needs exactly 'workspace' and 'regions' (extra: {sorted(extra)})")
    workspace = _rect_from(doc["workspace"], "workspace")
    if not isinstance(doc["regions"], list):
        raise ParseError("'regions' must be a list")
    regions = []
    for i, obj in enumerate(doc["regions"]):
        where = f"regions[{i}]"
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected an object")
        unknown = set(obj) - _REGION_KEYS
        if unknown:
            raise ParseError(f"{where}: unknown fields {sorted(unknown)}")
        missing = {"name", "kind", "rect"} - set(obj)
        if missing:
            raise ParseError(f"{where}: missing fields {sorted(missing)}")
        if not isinstance(obj["name"], str):
            raise ParseError(f"{where}.name: expected a string")
        try:
            kind = RegionKind(obj["kind"])
        except ValueError:
            raise ParseError(f"{where}.kind: unknown region kind {obj['kind']!r}") from None
        atom = obj.get("atom")
        if atom is not None and not isinstance(atom, str):
            raise ParseError(f"{where}.atom: expected a string")
        regions.append(RegionSpec(obj["name"], kind, _rect_from(obj["rect"], f"{where}.rect"), atom))
    return MapSpec(workspace, tuple(regions))


def load_map_file(path) -> MapSpec:
    return load_map(Path(path).read_text(encoding="utf-8"))


def _rect_doc(r: Rect) -> dict:
    return {"x_min": r.x_min, "y_min": r.y_min, "x_max": r.x_max, "y_max": r.y_max}


def dump_map(m: MapSpec) -> str:
    regions = []
    for r in m.regions:
        d = {"name": r.name, "kind": r.kind.value, "rect": _rect_doc(r.rect)}
        if r.atom is not None:
            d["atom"] = r.atom
        regions.append(d)
    return json.dumps({"workspace": _rect_doc(m.workspace), "regions": regions}, indent=2) + "\n"


def builtin_map(name: str = "canonical") -> MapSpec:
    """Load one of the bundled maps (``canonical`` or ``canonical_unsafe``)."""
    text = resources.files("ltlplan").joinpath("data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return load_map(text)
