"""CSV writers and readers. Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from cavopt.core import PiecewiseTrajectory
from cavopt.sim import SimulationReport

TRAJECTORY_COLUMNS = ("t_s", "p_m", "v_mps", "u_mps2", "arc_kind")
PLOT_COLUMNS = ("t_s", "series", "value")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def trajectory_rows(traj: PiecewiseTrajectory, dt: float):
    times = traj.sample_times(dt)
    p, v, u = traj.eval(times)
    idx = traj.arc_index(times)
    for t, pi, vi, ui, k in zip(times, p, v, u, idx):
        yield fmt(t), fmt(pi), fmt(vi), fmt(ui), traj.arcs[int(k)].kind.value


def write_trajectory_csv(traj: PiecewiseTrajectory, path: str | Path, dt: float = 0.01) -> None:
    _write(Path(path), TRAJECTORY_COLUMNS, trajectory_rows(traj, dt))


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        rows = list(reader)
    out = {col: np.array([float(r[col]) for r in rows]) for col in TRAJECTORY_COLUMNS[:-1]}
    out["arc_kind"] = np.array([r["arc_kind"] for r in rows])
    return out


def cost_from_samples(t: np.ndarray, u: np.ndarray) -> float:
    """Integral of u^2/2 for a control that is linear between samples (exact then)."""
    dt = np.diff(t)
    u0, u1 = u[:-1], u[1:]
    return float(np.sum(dt / 6.0 * (u0 * u0 + u0 * u1 + u1 * u1)))


def write_plot_data(series: dict[str, PiecewiseTrajectory], path: str | Path,
                    dt: float = 0.01) -> None:
    """Long-format (t_s, series, value) rows; series names are '<trajectory>:<quantity>'."""
    rows = []
    for name, traj in series.items():
        times = traj.sample_times(dt)
        p, v, u = traj.eval(times)
        for qty, values in (("p_m", p), ("v_mps", v), ("u_mps2", u)):
            rows.extend((fmt(t), f"{name}:{qty}", fmt(x)) for t, x in zip(times, values))
    _write(Path(path), PLOT_COLUMNS, rows)


SUMMARY_COLUMNS = ("id", "lane", "case", "cost", "t0_s", "tm_s", "t_f_s", "exit_speed_mps")
VIOLATION_COLUMNS = ("kind", "vehicle_a", "vehicle_b", "t_start_s", "t_end_s", "gap_m",
                     "required_m")


def write_summary(report: SimulationReport, path: str | Path) -> None:
    rows = [(p.id, p.lane, p.case.value, fmt(p.cost), fmt(p.bc.t0), fmt(p.bc.tm), fmt(p.t_f),
             fmt(p.exit_speed)) for p in report.plans]
    _write(Path(path), SUMMARY_COLUMNS, rows)


def write_violations(report: SimulationReport, path: str | Path) -> None:
    rows = [("rear_end", v.leader, v.follower, fmt(v.t), fmt(v.t), fmt(v.gap), fmt(v.required))
            for v in report.rear_end]
    rows += [("lateral", v.first, v.second, fmt(v.overlap_start), fmt(v.overlap_end), "", "")
             for v in report.lateral]
    _write(Path(path), VIOLATION_COLUMNS, rows)


def write_report(report: SimulationReport, out_dir: str | Path, dt: float = 0.01) -> list[Path]:
    """Per-vehicle trajectories, summary and violations; returns the written paths."""
    out = Path(out_dir)
    (out / "vehicles").mkdir(parents=True, exist_ok=True)
    written = []
    for plan in report.plans:
        path = out / "vehicles" / f"{plan.id}.csv"
        write_trajectory_csv(plan.traj, path, dt)
        written.append(path)
    write_summary(report, out / "summary.csv")
    write_violations(report, out / "violations.csv")
    return written + [out / "summary.csv", out / "violations.csv"]
