"""ltlplan command line: decompose | plan | simulate | translate | compile-dfa.

Exit codes::

    0  success
    2  malformed or invalid input (map, formula, prompt, trajectory CSV, config)
    3  the map has no free cell
    4  no high-level plan satisfies the task
    5  a sampling planner ran out of budget (stage index in the message)
    6  task not expressible in goal-schedule mode
    7  kinematic tracking failed
    8  a produced trajectory failed the DFA monitor or structural checks
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .artifacts import (plan_json, read_trajectory_csv, write_cells_csv, write_sim_trace_csv,
                        write_text, write_trajectory_csv)
from .decomposition import decompose
from .errors import (AmbiguousOrder, DegenerateGrid, LtlPlanError, NoGoalsRecognized, NoPlan,
                     ParseError, PlanFailure, StartInObstacle, UnsupportedFragment, UnsupportedTask,
                     ValidationError)
from .high_level import build_ts, plan_high_level
from .kinematics import DiffDriveParams, PidGains, track_trajectory
from .low_level import (PlannerConfig, check_trajectory, goal_schedule_plan, plan_stages,
                        schedule_from_formula)
from .ltl import accepts, compile_dfa, format_formula, parse_ltl, run_dfa, to_dot
from .maps import builtin_map, load_map_file
from .nl import LlmEndpointConfig, translate

log = logging.getLogger("ltlplan")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NOPLAN, EXIT_PLANFAIL = 0, 2, 3, 4, 5
EXIT_UNSUPPORTED, EXIT_TRACKING, EXIT_MONITOR = 6, 7, 8

_EXIT_FOR = [
    (DegenerateGrid, EXIT_DEGENERATE),
    (NoPlan, EXIT_NOPLAN),
    (PlanFailure, EXIT_PLANFAIL),
    (UnsupportedTask, EXIT_UNSUPPORTED),
    ((ParseError, ValidationError, UnsupportedFragment, StartInObstacle,
      NoGoalsRecognized, AmbiguousOrder), EXIT_INPUT),
]


class UsageError(LtlPlanError):
    pass


class MonitorRejected(LtlPlanError):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, MonitorRejected):
        return EXIT_MONITOR
    for kinds, code in _EXIT_FOR:
        if isinstance(exc, kinds):
            return code
    return EXIT_INPUT


# -- shared option groups --------------------------------------------------------

def _add_map(p):
    p.add_argument("--map", default="canonical",
                   help="map JSON file, or the name of a bundled map "
                        "(canonical, canonical_unsafe) (default: canonical)")


def _add_task(p, required=True):
    p.add_argument("--ltl", help="task formula, e.g. 'F(g1 & F(g2))'")
    p.add_argument("--prompt", help="natural-language task, translated before planning")
    p.add_argument("--llm-url", help="chat-completion endpoint used to translate --prompt "
                                     "(API key from LTLPLAN_LLM_API_KEY); rules only when unset")
    p.add_argument("--llm-model", default="default", help="model name sent to the endpoint (default: default)")
    p.add_argument("--llm-timeout", type=float, default=30.0, help="endpoint timeout in seconds (default: 30.0)")
    p.add_argument("--llm-retries", type=int, default=2, help="endpoint retries (default: 2)")
    p.set_defaults(_task_required=required)


def _add_out(p, default):
    p.add_argument("--out", default=default, help=f"output directory (default: {default})")


def _add_planner(p):
    g = p.add_argument_group("sampling planner")
    g.add_argument("--planner", choices=["rrt", "prm"], default="rrt", help="low-level planner (default: rrt)")
    g.add_argument("--mode", choices=["hierarchical", "goal-schedule"], default="hierarchical",
                   help="hierarchical: product-automaton stages restrict sampling; "
                        "goal-schedule: visit goals in order over all free space (default: hierarchical)")
    g.add_argument("--max-iterations", type=int, default=5000, help="RRT iteration budget K (default: 5000)")
    g.add_argument("--step-size", type=float, default=0.5, help="RRT steering step dq (default: 0.5)")
    g.add_argument("--prm-nodes", type=int, default=800, help="PRM roadmap size N (default: 800)")
    g.add_argument("--prm-neighbors", type=int, default=8, help="PRM neighbours k (default: 8)")
    g.add_argument("--goal-radius", type=float, default=0.5,
                   help="planner goal tolerance in workspace units (default: 0.5)")
    g.add_argument("--edge-resolution", type=float, default=0.05,
                   help="segment collision-check spacing (default: 0.05)")
    g.add_argument("--inflation", type=int, default=1,
                   help="rings of neighbouring cells added to each stage corridor (default: 1)")
    g.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    g.add_argument("--seeds", help="seed range 'a..b' (inclusive) planned concurrently; "
                                   "outputs go to <out>/seed_<n>/")
    g.add_argument("--workers", type=int, default=None, help="processes for --seeds (default: CPU count)")


def _add_robot(p):
    g = p.add_argument_group("robot and controller")
    g.add_argument("--dt", type=float, default=0.02, help="integration step in seconds (default: 0.02)")
    g.add_argument("--wheelbase", type=float, default=0.3, help="wheel separation L (default: 0.3)")
    g.add_argument("--v-max", type=float, default=0.5, help="forward speed when aligned (default: 0.5)")
    g.add_argument("--wheel-speed-max", type=float, default=1.0, help="wheel speed limit (default: 1.0)")
    g.add_argument("--kp", type=float, default=8.0, help="PID proportional gain (default: 8.0)")
    g.add_argument("--ki", type=float, default=0.0, help="PID integral gain (default: 0.0)")
    g.add_argument("--kd", type=float, default=0.05, help="PID derivative gain (default: 0.05)")
    g.add_argument("--integral-limit", type=float, default=1.0, help="PID anti-windup clamp (default: 1.0)")
    g.add_argument("--arrival-radius", type=float, default=0.05,
                   help="distance at which a waypoint counts as reached (default: 0.05)")
    g.add_argument("--waypoint-timeout", type=float, default=60.0,
                   help="seconds allowed per waypoint T_max (default: 60.0)")
    g.add_argument("--heading-threshold", type=float, default=math.pi / 4,
                   help="drive forward only below this heading error in rad (default: pi/4)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltlplan", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("--config", help="JSON file of option defaults (keys are long option names "
                                    "with '-' or '_'); command-line flags win")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="cell decomposition figure and cell CSV")
    _add_map(d)
    _add_out(d, "out")
    d.set_defaults(func=cmd_decompose)

    c = sub.add_parser("compile-dfa", help="compile a task to a DFA and write it as DOT")
    _add_map(c)
    _add_task(c)
    _add_out(c, "out")
    c.set_defaults(func=cmd_compile_dfa)

    t = sub.add_parser("translate", help="translate a natural-language task to a formula")
    _add_map(t)
    _add_task(t)
    t.set_defaults(func=cmd_translate)

    pl = sub.add_parser("plan", help="full pipeline: task -> DFA -> high-level plan -> trajectory",
                        description="Plan a trajectory for a task and write DOT, JSON, CSV and SVG artifacts.")
    _add_map(pl)
    _add_task(pl)
    _add_planner(pl)
    pl.add_argument("--no-figures", action="store_true", help="skip SVG output")
    _add_out(pl, "out")
    pl.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="track a trajectory CSV with the differential-drive model")
    _add_map(s)
    s.add_argument("--trajectory", required=False, help="trajectory CSV written by 'plan'")
    _add_task(s, required=False)
    _add_robot(s)
    s.add_argument("--no-figures", action="store_true", help="skip SVG output")
    _add_out(s, "out")
    s.set_defaults(func=cmd_simulate)
    return p


def _subparser(p: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in p._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        sp = _subparser(parser, args.command)
        dests = {a.dest for a in sp._actions}
        defaults = {}
        for k, v in doc.items():
            key = k.replace("-", "_")
            if key not in dests or key in ("help", "func"):
                raise UsageError(f"unknown config key {k!r} for '{args.command}'")
            defaults[key] = v
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# -- helpers ---------------------------------------------------------------------

def _load_map(spec: str):
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        try:
            return load_map_file(path)
        except OSError as exc:
            raise ParseError(f"cannot read map {spec}: {exc}") from exc
    try:
        return builtin_map(spec)
    except FileNotFoundError:
        raise ParseError(f"no map file or bundled map named {spec!r}") from None


def _task_formula(args, m) -> str | None:
    if args.ltl is not None and args.prompt is not None:
        raise UsageError("give either --ltl or --prompt, not both")
    if args.ltl is not None:
        return args.ltl
    if args.prompt is not None:
        cfg = None
        if args.llm_url:
            cfg = LlmEndpointConfig(args.llm_url, args.llm_model, timeout=args.llm_timeout,
                                    max_retries=args.llm_retries)
        res = translate(args.prompt, m.atoms, cfg)
        log.info("translated prompt (%s): %s", res.source.value, res.formula_text)
        return res.formula_text
    if args._task_required:
        raise UsageError("a task is required: --ltl or --prompt")
    return None


def _planner_config(args, seed) -> PlannerConfig:
    try:
        return PlannerConfig(max_iterations=args.max_iterations, step_size=args.step_size,
                             prm_nodes=args.prm_nodes, prm_neighbors=args.prm_neighbors,
                             goal_radius=args.goal_radius, edge_check_resolution=args.edge_resolution,
                             rng_seed=seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _parse_seeds(text: str) -> list[int]:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise UsageError(f"--seeds expects 'a..b', got {text!r}") from None
    if hi < lo:
        raise UsageError("--seeds range is empty")
    return list(range(lo, hi + 1))


# -- commands ----------------------------------------------------------------------

def cmd_decompose(args) -> int:
    from .plotting import plot_decomposition, save_figure

    m = _load_map(args.map)
    g = decompose(m)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cells_csv(g, out / "cells.csv")
    save_figure(plot_decomposition(m, g), out / "decomposition.svg")
    print(f"cells={len(g.cells)} free={len(g.free_ids)} edges={len(g.edges)}")
    return EXIT_OK


def cmd_compile_dfa(args) -> int:
    m = _load_map(args.map)
    text = _task_formula(args, m)
    f = parse_ltl(text)
    d = compile_dfa(f)
    write_text(Path(args.out) / "dfa.dot", to_dot(d))
    trap = d.name(d.trap) if d.trap is not None else "none"
    print(f"formula={format_formula(f)} states={len(d.states)} "
          f"accepting={','.join(d.name(s) for s in sorted(d.accepting))} trap={trap}")
    return EXIT_OK


def cmd_translate(args) -> int:
    m = _load_map(args.map)
    if args.prompt is None:
        raise UsageError("translate needs --prompt")
    args.ltl = None
    print(_task_formula(args, m))
    return EXIT_OK


def _run_planner(args, m, g, f, d, plan, seed, edges_out=None):
    cfg = _planner_config(args, seed)
    start = m.start.rect.centroid
    if args.mode == "goal-schedule":
        goals, excluded = schedule_from_formula(f, g)
        return goal_schedule_plan(goals, excluded, g, start, cfg, args.planner, edges_out)
    return plan_stages(plan, start, g, cfg, args.planner, edges_out)


def _verify(traj, g, d, plan) -> None:
    allowed = [s.allowed for s in plan.stages] if plan is not None else None
    problems = check_trajectory(traj, g, allowed)
    if problems:
        raise MonitorRejected("trajectory check failed: " + "; ".join(problems[:3]))
    states = run_dfa(d, traj.label_trace(g))
    if d.trap is not None and d.trap in states:
        raise MonitorRejected("trajectory violates the task (DFA trap)")
    if not accepts(d, traj.label_trace(g)):
        raise MonitorRejected("trajectory does not complete the task")


def _plan_one(args, seed, out: Path, figures: bool) -> tuple[int, str]:
    """Plan for one seed and write its artifacts; returns (exit code, summary)."""
    m = _load_map(args.map)
    text = _task_formula(args, m)
    f = parse_ltl(text)
    d = compile_dfa(f)
    out.mkdir(parents=True, exist_ok=True)
    write_text(out / "formula.txt", format_formula(f) + "\n")
    write_text(out / "dfa.dot", to_dot(d))
    g = decompose(m)
    plan = None
    if args.mode == "hierarchical":
        if args.inflation < 0:
            raise ValidationError("--inflation must be non-negative")
        plan = plan_high_level(build_ts(g, m), d, args.inflation)
        write_text(out / "plan.json", plan_json(plan, format_formula(f)))
    edges = [] if figures else None
    traj = _run_planner(args, m, g, f, d, plan, seed, edges)
    write_trajectory_csv(traj, out / "trajectory.csv")
    if figures:
        from .plotting import plot_plan, plot_trajectory, save_figure
        if plan is not None:
            save_figure(plot_plan(m, g, plan), out / "plan.svg")
        title = f"{args.planner.upper()} trajectory ({args.mode}, seed {seed})"
        save_figure(plot_trajectory(m, g, traj, plan, edges, title), out / "trajectory.svg")
    _verify(traj, g, d, plan)
    return EXIT_OK, (f"planner={args.planner} seed={seed} waypoints={len(traj.waypoints)} length={traj.length:.3f} "
                     f"stages={len(traj.stage_boundaries)}")


def _seed_worker(payload):
    args, seed, out, figures = payload
    try:
        return seed, *_plan_one(args, seed, out, figures)
    except LtlPlanError as exc:
        return seed, exit_code_for(exc), f"seed={seed} error: {exc}"


def cmd_plan(args) -> int:
    figures = not args.no_figures
    out = Path(args.out)
    if not args.seeds:
        code, summary = _plan_one(args, args.seed, out, figures)
        print(summary)
        return code
    seeds = _parse_seeds(args.seeds)
    # validate the task once up front so that input errors are reported plainly
    _task_formula(args, _load_map(args.map))
    jobs = [(args, s, out / f"seed_{s}", figures) for s in seeds]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = sorted(pool.map(_seed_worker, jobs))
    lines = ["seed,exit_code,summary"] + [f"{s},{c},{msg}" for s, c, msg in results]
    write_text(out / "seeds.csv", "\n".join(lines) + "\n")
    ok = sum(1 for _, c, _ in results if c == EXIT_OK)
    print(f"{ok}/{len(results)} seeds succeeded")
    failed = [c for _, c, _ in results if c != EXIT_OK]
    return failed[0] if failed else EXIT_OK


def cmd_simulate(args) -> int:
    if not args.trajectory:
        raise UsageError("simulate needs --trajectory")
    m = _load_map(args.map)
    g = decompose(m)
    try:
        traj = read_trajectory_csv(args.trajectory)
    except OSError as exc:
        raise ParseError(f"cannot read trajectory {args.trajectory}: {exc}") from exc
    for i, w in enumerate(traj.waypoints):
        if not 0 <= w.cell < len(g.cells):
            raise ValidationError(f"waypoint {i} refers to unknown cell {w.cell}")
    text = _task_formula(args, m)
    d = compile_dfa(parse_ltl(text)) if text is not None else None
    try:
        p = DiffDriveParams(args.wheelbase, args.v_max, args.wheel_speed_max, args.dt)
        gains = PidGains(args.kp, args.ki, args.kd, args.integral_limit)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    tr = track_trajectory(traj, p, gains, g, d, goal_radius=args.arrival_radius,
                          waypoint_timeout=args.waypoint_timeout,
                          heading_threshold=args.heading_threshold)
    out = Path(args.out)
    write_sim_trace_csv(tr, out / "sim_trace.csv")
    if not args.no_figures:
        from .plotting import plot_simulation, save_figure
        save_figure(plot_simulation(m, g, traj, tr), out / "simulation.svg")
    print(f"success={str(tr.success).lower()} waypoints_reached={tr.waypoints_reached}/"
          f"{len(traj.waypoints) - 1} t={tr.t[-1]:.2f} reason={tr.reason}")
    return EXIT_OK if tr.success else EXIT_TRACKING


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"ltlplan: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except LtlPlanError as exc:
        print(f"ltlplan: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
