"""Figure rendering for simulation reports. Headless (Agg) only."""
from __future__ import annotations

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulator import Scenario, Trajectory, _rect_corners  # noqa: E402
from .dynamics import VesselState  # noqa: E402


def _footprints(ax, track, color, every):
    for k in range(0, len(track.states), every):
        s = VesselState.from_array(track.states[k])
        corners = _rect_corners(s, track.params, margin=0.0)
        ax.fill(corners[:, 0], corners[:, 1], color=color, alpha=0.25,
                linewidth=0)


def save_trajectory_figure(trajectory: Trajectory, path,
                           scenario: Scenario | None = None) -> None:
    """Realized paths with hull footprints; goals and planned waypoints."""
    fig, ax = plt.subplots(figsize=(8, 8))
    every = max(len(trajectory.tracks[0].states) // 8, 1)
    for i, track in enumerate(trajectory.tracks):
        color = f"C{i % 10}" if track.is_agent else "0.45"
        style = "-" if track.is_agent else "--"
        ax.plot(track.states[:, 0], track.states[:, 1], style, color=color,
                label=track.vessel_id, linewidth=1.2)
        ax.plot(track.states[0, 0], track.states[0, 1], "o", color=color,
                markersize=5)
        _footprints(ax, track, color, every)
        if track.plan_events:
            _, last_plan = track.plan_events[-1]
            if last_plan:
                pts = np.array([[x, y] for x, y, _ in last_plan])
                ax.plot(pts[:, 0], pts[:, 1], ":", color=color,
                        linewidth=0.8)
    if scenario is not None:
        for agent in scenario.agents:
            for g in agent.goals:
                ax.plot(g[0], g[1], "x", color="k", markersize=8)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_controls_figure(trajectory: Trajectory, path) -> None:
    """Acceleration, yaw rate, and speed traces for every reactive vessel."""
    agents = trajectory.agent_tracks()
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for i, track in enumerate(agents):
        color = f"C{i % 10}"
        t = np.arange(len(track.inputs)) * trajectory.dt
        axes[0].plot(t, track.inputs[:, 0], color=color,
                     label=track.vessel_id)
        axes[1].plot(t, track.inputs[:, 1], color=color)
        axes[2].plot(np.arange(len(track.states)) * trajectory.dt,
                     track.states[:, 3], color=color)
    axes[0].set_ylabel("a [m/s^2]")
    axes[1].set_ylabel("omega [rad/s]")
    axes[2].set_ylabel("v [m/s]")
    axes[2].set_xlabel("t [s]")
    axes[0].legend(loc="best", fontsize=8)
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_profile_figure(rows: list[dict], path) -> None:
    """Wall time per step against vessel count, with the MPC share."""
    counts = np.array([r["vessels"] for r in rows], dtype=float)
    total = np.array([r["step_time"] for r in rows])
    mpc = np.array([r["mpc_time"] for r in rows])
    wp = np.array([r["waypoint_time"] for r in rows])
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(counts, 1e3 * total, "o-", label="full step")
    ax.plot(counts, 1e3 * mpc, "s-", label="mpc")
    ax.plot(counts, 1e3 * wp, "^-", label="waypoint engine")
    if len(counts) >= 2:
        slope, intercept = np.polyfit(counts, total, 1)
        ax.plot(counts, 1e3 * (slope * counts + intercept), "--",
                color="0.5", label="linear fit")
    ax.set_xlabel("vessels")
    ax.set_ylabel("time per step [ms]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_rule_rates_figure(summary_dict: dict, path) -> None:
    """Bar chart of per-rule compliance plus goal and collision rates."""
    rates = dict(summary_dict.get("rule_rates", {}))
    rates["goal"] = summary_dict.get("goal_rate", 0.0)
    rates["no collision"] = 1.0 - summary_dict.get("collision_rate", 0.0)
    names = list(rates)
    values = [rates[k] for k in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(names)), values, color="C0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("rate")
    ax.grid(True, axis="y", alpha=0.3)
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.2f}", ha="center", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
