"""Static figures rendered straight to files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from cavopt.core import Limits, PiecewiseTrajectory  # noqa: E402
from cavopt.sim import SimulationReport  # noqa: E402

_COLORS = {"unconstrained": "tab:blue", "speed_only": "tab:red", "control_only": "tab:red",
           "final": "tab:green"}


def _bound(ax, value, label):
    if math.isfinite(value):
        ax.axhline(value, color="0.4", lw=0.8, ls="--", label=label)


def plot_trajectories(series: dict[str, PiecewiseTrajectory], path: str | Path,
                      lim: Limits | None = None, title: str = "", dt: float = 0.01) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(6.5, 7.5), sharex=True)
    for name, traj in series.items():
        t = traj.sample_times(dt)
        p, v, u = traj.eval(t)
        color = _COLORS.get(name)
        for ax, y in zip(axes, (p, v, u)):
            ax.plot(t, y, color=color, lw=1.4, label=name)
        for tj in traj.junctions:
            axes[2].axvline(tj, color=color, lw=0.6, ls=":")
    if lim is not None:
        _bound(axes[1], lim.vmax, "vmax")
        _bound(axes[1], lim.vmin if lim.vmin > 0 else math.inf, "vmin")
        _bound(axes[2], lim.umax, "umax")
        _bound(axes[2], lim.umin, "umin")
    axes[0].set_ylabel("position [m]")
    axes[1].set_ylabel("speed [m/s]")
    axes[2].set_ylabel("control [m/s$^2$]")
    axes[2].set_xlabel("time [s]")
    axes[0].legend(loc="upper left", fontsize=8)
    if title:
        axes[0].set_title(title)
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_schedule(report: SimulationReport, path: str | Path, control_zone_length: float,
                  dt: float = 0.05) -> Path:
    """Lane-frame position and speed of every vehicle up to merging-zone exit."""
    fig, (ax_p, ax_v) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    for plan in report.plans:
        t = np.arange(plan.bc.t0, plan.t_f, dt)
        t = np.append(t, plan.t_f)
        p, v = plan.state(t)
        line, = ax_p.plot(t, p, lw=1.2, label=f"{plan.id} ({plan.lane})")
        ax_v.plot(t, v, lw=1.2, color=line.get_color())
        ax_p.plot([plan.bc.tm], [control_zone_length], "o", ms=3, color=line.get_color())
    ax_p.axhline(control_zone_length, color="0.4", lw=0.8, ls="--")
    ax_p.set_ylabel("lane position [m]")
    ax_v.set_ylabel("speed [m/s]")
    ax_v.set_xlabel("time [s]")
    if len(report.plans) <= 12:
        ax_p.legend(fontsize=7, loc="upper left")
    for ax in (ax_p, ax_v):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
