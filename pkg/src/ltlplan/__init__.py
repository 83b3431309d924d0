"""Hierarchical LTL-constrained sampling-based motion planning on cell decompositions."""

from .decomposition import Cell, CellGraph, decompose, locate_cell, neighbors
from .high_level import HighLevelPlan, build_ts, extract_stages, plan_high_level, product_bfs
from .ltl import accepts, compile_dfa, dfa_step, eval_finite_trace, format_formula, parse_ltl
from .kinematics import DiffDriveParams, PidGains, RobotState, SimTrace, track_trajectory
from .low_level import PlannerConfig, Trajectory, goal_schedule_plan, plan_stages, prm_plan, rrt_plan
from .maps import MapSpec, Point, Rect, RegionKind, RegionSpec, builtin_map, load_map, point_in_rect
from .nl import LlmEndpointConfig, TranslationResult, translate_llm, translate_rules

__version__ = "0.1.0"

__all__ = [
    "Cell", "CellGraph", "decompose", "locate_cell", "neighbors",
    "HighLevelPlan", "build_ts", "extract_stages", "plan_high_level", "product_bfs",
    "accepts", "compile_dfa", "dfa_step", "eval_finite_trace", "format_formula", "parse_ltl",
    "DiffDriveParams", "PidGains", "RobotState", "SimTrace", "track_trajectory",
    "PlannerConfig", "Trajectory", "goal_schedule_plan", "plan_stages", "prm_plan", "rrt_plan",
    "MapSpec", "Point", "Rect", "RegionKind", "RegionSpec", "builtin_map", "load_map", "point_in_rect",
    "LlmEndpointConfig", "TranslationResult", "translate_llm", "translate_rules",
]
