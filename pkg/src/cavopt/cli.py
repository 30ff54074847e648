"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 infeasible instance,
4 oracle gap above tolerance, 5 safety violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from cavopt.constrained import solve
from cavopt.core import BoundaryConditions, Limits, cost, reachable_envelope
from cavopt.errors import Infeasible, ScenarioError
from cavopt.export import fmt, write_plot_data, write_report, write_trajectory_csv
from cavopt.fixtures import FIXTURES, get_fixture
from cavopt.oracle import solve_numeric
from cavopt.report import build_figure_data

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_GAP, EXIT_UNSAFE = 0, 2, 3, 4, 5
#: Relative analytic-versus-oracle cost gap accepted by --verify.
GAP_TOL = 5e-3
#: Absolute gap used instead when the optimal cost is essentially zero.
GAP_ATOL = 1e-6

log = logging.getLogger("cavopt")


class _InputError(Exception):
    pass


def _instance_args(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--L", type=float, required=required, help="control-zone distance [m]")
    p.add_argument("--T", type=float, required=required, help="horizon tm - t0 [s]")
    p.add_argument("--v0", type=float, required=required, help="entry speed [m/s]")
    p.add_argument("--t0", type=float, default=0.0, help="entry time [s]")
    p.add_argument("--vmin", type=float, default=0.0)
    p.add_argument("--vmax", type=float, default=math.inf)
    p.add_argument("--umin", type=float, default=-math.inf)
    p.add_argument("--umax", type=float, default=math.inf)


def _instance(args) -> tuple[BoundaryConditions, Limits]:
    try:
        bc = BoundaryConditions.from_horizon(args.L, args.T, args.v0, t0=args.t0)
        lim = Limits(args.vmin, args.vmax, args.umin, args.umax)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    return bc, lim


def _oracle_steps(bc: BoundaryConditions, dt: float) -> int:
    return max(100, int(round(bc.horizon / dt)))


def _gap(analytic: float, numeric: float) -> tuple[float, bool]:
    gap = (numeric - analytic) / analytic if analytic > GAP_ATOL else numeric - analytic
    tol = GAP_TOL if analytic > GAP_ATOL else GAP_ATOL
    return gap, abs(gap) <= tol


def cmd_solve(args) -> int:
    bc, lim = _instance(args)
    try:
        traj, _ = solve(bc, lim)
    except Infeasible as exc:
        lo, hi = reachable_envelope(bc, lim)
        print(f"infeasible: {exc}", file=sys.stderr)
        print(f"min_reachable_m: {fmt(lo)}")
        print(f"max_reachable_m: {fmt(hi)}")
        return EXIT_INFEASIBLE
    print(f"case: {traj.case.value}")
    print("junctions_s: " + (", ".join(fmt(t) for t in traj.junctions) or "none"))
    for k, arc in enumerate(traj.arcs):
        print(f"arc[{k}]: kind={arc.kind.value} t=[{fmt(arc.t_start)}, {fmt(arc.t_end)}] "
              f"a={fmt(arc.a)} b={fmt(arc.b)} c={fmt(arc.c)} d={fmt(arc.d)} origin={fmt(arc.origin)}")
    c = cost(traj)
    print(f"cost: {fmt(c)}")
    if args.csv:
        write_trajectory_csv(traj, args.csv, args.resolution)
    if args.plot:
        from cavopt.plotting import plot_trajectories
        plot_trajectories({"final": traj}, args.plot, lim, title=traj.case.value)
    if args.verify:
        numeric = solve_numeric(bc, lim, _oracle_steps(bc, args.oracle_dt))
        gap, ok = _gap(c, numeric.cost)
        print(f"oracle_cost: {fmt(numeric.cost)}")
        print(f"oracle_gap: {fmt(gap)}")
        if not ok:
            print("verification gap exceeds tolerance", file=sys.stderr)
            return EXIT_GAP
    return EXIT_OK


def _load(args):
    from cavopt.scenario import load_scenario
    from cavopt.sim import random_scenario
    if args.random is not None:
        return random_scenario(args.random, seed=args.seed)
    if not args.scenario:
        raise _InputError("either --scenario or --random is required")
    return load_scenario(args.scenario)


def cmd_simulate(args) -> int:
    from cavopt.sim import run
    try:
        cfg = _load(args)
    except ScenarioError as exc:
        raise _InputError(f"scenario: {exc}") from None
    try:
        report = run(cfg, dt_sample=args.resolution)
    except Infeasible as exc:
        print(f"infeasible vehicle {exc.vehicle}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = Path(args.out)
    write_report(report, out, args.resolution)
    if not args.no_plot:
        from cavopt.plotting import plot_schedule
        plot_schedule(report, out / "schedule.png", cfg.control_zone_length)
    print(f"vehicles: {len(report.plans)}")
    print(f"total_cost: {fmt(report.total_cost)}")
    for case, n in report.case_counts.items():
        if n:
            print(f"case_count[{case}]: {n}")
    print(f"rear_end_violations: {len(report.rear_end)}")
    print(f"lateral_violations: {len(report.lateral)}")
    status = EXIT_OK
    if args.verify:
        rows = ["id,analytic_cost,oracle_cost,gap"]
        for plan in report.plans:
            numeric = solve_numeric(plan.bc, cfg.limits, _oracle_steps(plan.bc, args.oracle_dt))
            gap, ok = _gap(plan.cost, numeric.cost)
            rows.append(f"{plan.id},{fmt(plan.cost)},{fmt(numeric.cost)},{fmt(gap)}")
            print(f"oracle_gap[{plan.id}]: {fmt(gap)}")
            if not ok:
                status = EXIT_GAP
        (out / "verify.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if not report.safe:
        return EXIT_UNSAFE
    return status


def cmd_figure(args) -> int:
    reported = None
    if args.scenario_id:
        fx = get_fixture(args.scenario_id)
        bc, lim, intermediate, reported = fx.bc, fx.lim, fx.intermediate, fx.reported_junction
        label = fx.name
    else:
        if None in (args.L, args.T, args.v0):
            raise _InputError("figure needs --scenario-id or all of --L, --T, --v0")
        bc, lim = _instance(args)
        intermediate, label = None, "instance"
    data = build_figure_data(bc, lim, intermediate, reported)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_plot_data(data.series, out / "plot_data.csv", args.resolution)
    lines = [f"instance: {label}"] + data.lines()
    (out / "diagnosis.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not args.no_plot:
        from cavopt.plotting import plot_trajectories
        plot_trajectories(data.series, out / "figure.png", lim, title=label)
    print("\n".join(lines))
    if not data.feasible and not args.scenario_id:
        return EXIT_INFEASIBLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance in closed form")
    _instance_args(p, required=True)
    p.add_argument("--verify", action="store_true", help="compare with the numerical oracle")
    p.add_argument("--csv", type=Path, help="write trajectory samples here")
    p.add_argument("--plot", type=Path, help="render a PNG of the trajectory here")
    p.add_argument("--resolution", type=float, default=0.01, help="CSV sample spacing [s]")
    p.add_argument("--oracle-dt", type=float, default=0.01, help="oracle grid step [s]")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="coordinate a scenario of arriving vehicles")
    p.add_argument("--scenario", help="scenario TOML path, or builtin:four-way")
    p.add_argument("--random", type=int, metavar="N", help="generate N random arrivals instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--resolution", type=float, default=0.01)
    p.add_argument("--oracle-dt", type=float, default=0.01)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure", help="comparison data for a named or custom instance")
    p.add_argument("--scenario-id", choices=sorted(FIXTURES))
    _instance_args(p, required=False)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--resolution", type=float, default=0.01)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("resolution", "oracle_dt"):
        if getattr(args, name, 1.0) <= 0:
            parser.error(f"--{name.replace('_', '-')} must be positive")
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
