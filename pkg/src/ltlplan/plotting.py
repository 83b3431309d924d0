"""Matplotlib figures for maps, decompositions, plans, trajectories and tracking runs.

All figures are written as SVG with a fixed hash salt and no date metadata so
that repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .maps import RegionKind  # noqa: E402

REGION_STYLE = {
    RegionKind.START: dict(facecolor="tab:red", alpha=0.55),
    RegionKind.GOAL: dict(facecolor="tab:blue", alpha=0.45),
    RegionKind.OBSTACLE: dict(facecolor="black", alpha=0.9),
    RegionKind.AVOID: dict(facecolor="none", edgecolor="red", linewidth=2.0, hatch="//"),
}
# stage colours: dark blue, light blue, dark orange, light orange, then cycle
STAGE_COLORS = ["#1f3d99", "#7fb3e6", "#d2691e", "#f5b971", "#6a8f3b", "#b38fd9"]


def _rect_patch(rect, **kw):
    return Rectangle((rect.x_min, rect.y_min), rect.width, rect.height, **kw)


def new_axes(m, size=6.0):
    fig, ax = plt.subplots(figsize=(size, size * m.workspace.height / m.workspace.width))
    ws = m.workspace
    ax.set_xlim(ws.x_min, ws.x_max)
    ax.set_ylim(ws.y_min, ws.y_max)
    ax.set_aspect("equal")
    return fig, ax


def draw_regions(ax, m, labels=True):
    for r in m.regions:
        ax.add_patch(_rect_patch(r.rect, **REGION_STYLE[r.kind]))
        if labels and r.kind is not RegionKind.OBSTACLE:
            c = r.rect.centroid
            ax.text(c.x, c.y, r.atom or r.name, ha="center", va="center", fontsize=9,
                    color="darkred" if r.kind is RegionKind.AVOID else "white")


def draw_cells(ax, g, ids=False):
    for c in g.cells:
        if c.free:
            ax.add_patch(_rect_patch(c.rect, fill=False, edgecolor="0.6", linewidth=0.4))
            if ids:
                p = c.rect.centroid
                ax.text(p.x, p.y, str(c.id), ha="center", va="center", fontsize=4, color="0.3")


def plot_map(m):
    fig, ax = new_axes(m)
    draw_regions(ax, m)
    ax.set_title("Map workspace")
    return fig


def plot_decomposition(m, g, ids=True):
    fig, ax = new_axes(m)
    draw_regions(ax, m, labels=False)
    draw_cells(ax, g, ids=ids)
    ax.set_title(f"Cell decomposition ({len(g.free_ids)} free cells)")
    return fig


def draw_plan(ax, g, plan, alpha=0.45):
    # later stages first so that stage 1 stays visible where corridors overlap
    for k in reversed(range(len(plan.stages))):
        color = STAGE_COLORS[k % len(STAGE_COLORS)]
        for cid in plan.stages[k].allowed:
            ax.add_patch(_rect_patch(g.cells[cid].rect, facecolor=color, alpha=alpha, linewidth=0))
    for k, st in enumerate(plan.stages):
        pts = [g.cells[c].rect.centroid for c in st.cell_path]
        ax.plot([p.x for p in pts], [p.y for p in pts], "-", lw=1.0,
                color=STAGE_COLORS[k % len(STAGE_COLORS)], label=f"stage {k + 1}")


def plot_plan(m, g, plan):
    fig, ax = new_axes(m)
    draw_plan(ax, g, plan)
    draw_regions(ax, m)
    draw_cells(ax, g)
    ax.legend(loc="upper center", fontsize=7, ncol=4, bbox_to_anchor=(0.5, -0.04))
    ax.set_title("High-level plan")
    return fig


def plot_trajectory(m, g, traj, plan=None, edges=None, title="Trajectory"):
    """Tree/roadmap edges in light strokes, the final path in bold."""
    fig, ax = new_axes(m)
    if plan is not None:
        draw_plan(ax, g, plan, alpha=0.25)
    draw_regions(ax, m)
    if edges:
        ax.add_collection(LineCollection(edges, colors="0.55", linewidths=0.35))
    xs = [w.position.x for w in traj.waypoints]
    ys = [w.position.y for w in traj.waypoints]
    ax.plot(xs, ys, "-", color="magenta", lw=2.0, label="path")
    ax.plot(xs[:1], ys[:1], "o", color="green", ms=5)
    ax.plot(xs[-1:], ys[-1:], "*", color="gold", ms=9)
    ax.set_title(title)
    return fig


def plot_simulation(m, g, traj, trace):
    fig, (ax, ax_err) = plt.subplots(1, 2, figsize=(11, 5))
    ws = m.workspace
    ax.set_xlim(ws.x_min, ws.x_max)
    ax.set_ylim(ws.y_min, ws.y_max)
    ax.set_aspect("equal")
    draw_regions(ax, m)
    ax.plot([w.position.x for w in traj.waypoints], [w.position.y for w in traj.waypoints],
            "--", color="magenta", lw=1.0, label="planned")
    ax.plot(trace.x, trace.y, "-", color="tab:green", lw=1.5, label="robot")
    ax.legend(fontsize=7)
    ax.set_title("Tracking: " + ("success" if trace.success else "failure"))
    ax_err.plot(trace.t, trace.e_distance, label="distance error")
    ax_err.plot(trace.t, trace.e_heading, label="heading error [rad]")
    ax_err.set_xlabel("t [s]")
    ax_err.legend(fontsize=7)
    return fig


def save_figure(fig, path):
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "ltlplan", "svg.fonttype": "none"}):
        fmt = path.suffix.lstrip(".") or "svg"
        meta = {"Date": None} if fmt == "svg" else None
        fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path
