"""Comparison data for one instance: unconstrained, single-bound and final trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from cavopt import classifier as clf
from cavopt.constrained import (solve, solve_case1, solve_case2, solve_case4, solve_case5,
                                solve_unconstrained_case)
from cavopt.core import (BoundaryConditions, Limits, PiecewiseTrajectory, cost, is_feasible,
                         reachable_envelope)
from cavopt.unconstrained import solve_unconstrained, terminal_speed


@dataclass
class FigureData:
    bc: BoundaryConditions
    lim: Limits
    series: dict[str, PiecewiseTrajectory] = field(default_factory=dict)
    facts: dict[str, float | bool | str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return bool(self.facts["feasible"])

    def lines(self) -> list[str]:
        out = []
        for key, value in self.facts.items():
            if isinstance(value, float):
                value = f"{value:.6g}"
            out.append(f"{key}: {value}")
        out.extend(f"note: {n}" for n in self.notes)
        return out


def build_figure_data(bc: BoundaryConditions, lim: Limits, intermediate: str | None = None,
                      reported_junction: float | None = None) -> FigureData:
    """Everything needed to compare the recursive and the condition-based routes.

    ``intermediate`` picks the single-bound construction to show ("speed" or
    "control"); by default the speed bound is preferred when both bind.
    """
    data = FigureData(bc, lim)
    facts = data.facts
    arc = solve_unconstrained(bc)
    data.series["unconstrained"] = solve_unconstrained_case(bc, lim)[0]
    side = clf.exclusion_side(bc)
    facts["side"] = side.value
    facts["unconstrained_u0_mps2"] = float(arc.b)
    facts["unconstrained_terminal_speed_mps"] = terminal_speed(bc)
    facts["unconstrained_cost"] = cost(data.series["unconstrained"])

    upper = side is clf.Side.MAX_SIDE
    if upper:
        v_bound, u_bound = lim.vmax, lim.umax
        speed_on, control_on = clf.vmax_active(bc, lim), clf.umax_active(bc, lim)
        speed_solver, control_solver = solve_case1, solve_case2
    else:
        v_bound, u_bound = lim.vmin, lim.umin
        speed_on, control_on = clf.vmin_active(bc, lim), clf.umin_active(bc, lim)
        speed_solver, control_solver = solve_case4, solve_case5
    facts["speed_bound_binds"] = speed_on
    facts["control_bound_binds"] = control_on

    if intermediate is None:
        intermediate = "speed" if speed_on else ("control" if control_on else "")
    if side is not clf.Side.NEITHER and intermediate == "speed" and math.isfinite(v_bound):
        traj, _ = speed_solver(bc, lim)
        data.series["speed_only"] = traj
        tau_s = traj.junctions[0] if traj.junctions else bc.tm
        facts["speed_arc_entry_s"] = tau_s
        facts["speed_only_u0_mps2"] = float(traj.arcs[0].control(bc.t0))
        facts["speed_only_cost"] = cost(traj)
        coupled = (clf.coupled_umax_given_vmax(bc, lim, tau_s) if upper
                   else clf.coupled_umin_given_vmin(bc, lim, tau_s))
        facts["control_binds_after_speed_arc"] = coupled
        if reported_junction is not None:
            facts["reported_speed_arc_entry_s"] = reported_junction
            facts["entry_discrepancy_s"] = reported_junction - tau_s
    elif side is not clf.Side.NEITHER and intermediate == "control" and math.isfinite(u_bound):
        traj, _ = control_solver(bc, lim)
        data.series["control_only"] = traj
        tau_c = traj.junctions[0] if traj.junctions else bc.t0
        v_tc = float(traj.eval(tau_c)[1])
        facts["control_arc_exit_s"] = tau_c
        facts["speed_at_control_exit_mps"] = v_tc
        facts["control_only_extreme_speed_mps"] = float(traj.eval(bc.tm)[1])
        facts["control_only_cost"] = cost(traj)
        facts["speed_binds_after_control_arc"] = (
            clf.coupled_vmax_given_umax(bc, lim, tau_c) if upper
            else clf.coupled_vmin_given_umin(bc, lim, tau_c))
        facts["speed_binds_after_control_arc_swapped_form"] = clf.printed_speed_given_control(
            bc, v_bound, u_bound, tau_c)

    lo, hi = reachable_envelope(bc, lim)
    facts["min_reachable_m"] = lo
    facts["max_reachable_m"] = hi
    feasible = is_feasible(bc, lim)
    facts["feasible"] = feasible
    if feasible:
        traj, _ = solve(bc, lim)
        data.series["final"] = traj
        facts["case"] = traj.case.value
        facts["final_cost"] = cost(traj)
    else:
        facts["case"] = "infeasible"
        data.notes.append(
            f"distance {bc.distance:.6g} m lies outside the reachable envelope "
            f"[{lo:.6g}, {hi:.6g}] m, so no trajectory satisfies every bound")
    return data
