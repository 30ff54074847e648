"""Closed-form constrained trajectories, costate reconstruction and KKT checks.

Every construction is one unconstrained arc (u affine, reaching zero either at
tm or at the entry of a terminal speed arc), optionally preceded by a control
arc that starts at t0 and optionally followed by a speed arc that ends at tm.
The unconstrained arc's coefficients (a*, b*) determine all costates:
lambda_p = a* everywhere, lambda_v = -(a* s + b*) off speed arcs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cavopt.classifier import check_feasible, classify
from cavopt.core import (ArcKind, BoundaryConditions, ConstraintCase, CostateProfile, Limits,
                         PiecewiseTrajectory, PolyArc, adjoined_hamiltonian)
from cavopt.errors import InconsistentCase
from cavopt.junctions import control_exit_time, double_junction_times, speed_entry_time
from cavopt.unconstrained import unconstrained_coefficients

#: Arcs shorter than this (s) are dropped and the case label downgraded.
MIN_ARC = 1e-9
#: Default absolute tolerance of every KKT check.
KKT_TOL = 1e-6

_CASE_BY_KINDS = {
    (ArcKind.UNCONSTRAINED,): ConstraintCase.UNCONSTRAINED,
    (ArcKind.UNCONSTRAINED, ArcKind.SPEED_MAX): ConstraintCase.VMAX_ONLY,
    (ArcKind.CONTROL_MAX, ArcKind.UNCONSTRAINED): ConstraintCase.UMAX_ONLY,
    (ArcKind.CONTROL_MAX,): ConstraintCase.UMAX_ONLY,
    (ArcKind.CONTROL_MAX, ArcKind.UNCONSTRAINED, ArcKind.SPEED_MAX): ConstraintCase.UMAX_AND_VMAX,
    (ArcKind.CONTROL_MAX, ArcKind.SPEED_MAX): ConstraintCase.UMAX_AND_VMAX,
    (ArcKind.UNCONSTRAINED, ArcKind.SPEED_MIN): ConstraintCase.VMIN_ONLY,
    (ArcKind.CONTROL_MIN, ArcKind.UNCONSTRAINED): ConstraintCase.UMIN_ONLY,
    (ArcKind.CONTROL_MIN,): ConstraintCase.UMIN_ONLY,
    (ArcKind.CONTROL_MIN, ArcKind.UNCONSTRAINED, ArcKind.SPEED_MIN): ConstraintCase.UMIN_AND_VMIN,
    (ArcKind.CONTROL_MIN, ArcKind.SPEED_MIN): ConstraintCase.UMIN_AND_VMIN,
}


@dataclass(frozen=True)
class _Piece:
    kind: ArcKind
    start: float  # relative to t0
    end: float
    a: float
    b: float
    speed: float = math.nan  # fixed speed of a speed arc


def _assemble(bc: BoundaryConditions, pieces: list[_Piece], a_star: float, b_star: float
              ) -> tuple[PiecewiseTrajectory, CostateProfile]:
    kept = [pc for pc in pieces if pc.end - pc.start >= MIN_ARC]
    if not kept:
        kept = [max(pieces, key=lambda pc: pc.end - pc.start)]
    T = bc.horizon
    # Re-stitch windows so that dropped slivers leave no gaps.
    bounds = [0.0] + [pc.end for pc in kept[:-1]] + [T]
    origin = bc.t0
    arcs: list[PolyArc] = []
    v_start, p_start = bc.v0, bc.p0
    for pc, lo, hi in zip(kept, bounds[:-1], bounds[1:]):
        if pc.kind.is_speed:
            a, b, c = 0.0, 0.0, pc.speed
            d = p_start - c * lo
        else:
            a, b = pc.a, pc.b
            c = v_start - (0.5 * a * lo + b) * lo
            d = p_start - ((a / 6.0 * lo + 0.5 * b) * lo + c) * lo
        arc = PolyArc(a=a, b=b, c=c, d=d, t_start=origin + lo, t_end=origin + hi,
                      kind=pc.kind, origin=origin)
        arcs.append(arc)
        v_start = float(arc.speed(origin + hi))
        p_start = float(arc.position(origin + hi))
    kinds = tuple(arc.kind for arc in arcs)
    try:
        case = _CASE_BY_KINDS[kinds]
    except KeyError:
        raise InconsistentCase(f"unexpected arc sequence {[k.value for k in kinds]}") from None
    traj = PiecewiseTrajectory(arcs=tuple(arcs), case=case)
    return traj, _costates(traj, a_star, b_star)


def _costates(traj: PiecewiseTrajectory, a_star: float, b_star: float) -> CostateProfile:
    lambda_v, mu_a, mu_b, eta_c, eta_d = [], [], [], [], []
    zero = (0.0, 0.0)
    for arc in traj.arcs:
        if arc.kind.is_speed:
            lambda_v.append(zero)
            mu_a.append(zero)
            mu_b.append(zero)
            # lambda_v stays at zero, so the speed multiplier cancels lambda_p.
            eta_c.append(-a_star if arc.kind is ArcKind.SPEED_MAX else 0.0)
            eta_d.append(a_star if arc.kind is ArcKind.SPEED_MIN else 0.0)
            continue
        lambda_v.append((-a_star, -b_star))
        eta_c.append(0.0)
        eta_d.append(0.0)
        if arc.kind is ArcKind.CONTROL_MAX:
            mu_a.append((a_star, b_star - arc.b))
            mu_b.append(zero)
        elif arc.kind is ArcKind.CONTROL_MIN:
            mu_a.append(zero)
            mu_b.append((-a_star, arc.b - b_star))
        else:
            mu_a.append(zero)
            mu_b.append(zero)
    n = len(traj.arcs)
    pi_jump = 0.0
    for k in range(n - 1):
        if traj.arcs[k + 1].kind.is_speed:
            tj = traj.arcs[k].t_end - traj.arcs[0].origin
            left = lambda_v[k][0] * tj + lambda_v[k][1]
            pi_jump = left - (lambda_v[k + 1][0] * tj + lambda_v[k + 1][1])
    profile = CostateProfile(
        origin=traj.arcs[0].origin,
        breaks=(traj.t_start, *traj.junctions, traj.t_end),
        lambda_p=tuple([a_star] * n),
        lambda_v=tuple(lambda_v), mu_a=tuple(mu_a), mu_b=tuple(mu_b),
        eta_c=tuple(eta_c), eta_d=tuple(eta_d), pi_jump=pi_jump,
    )
    return profile


def _with_hamiltonian(traj: PiecewiseTrajectory, profile: CostateProfile, lim: Limits
                      ) -> CostateProfile:
    values = []
    for k, arc in enumerate(traj.arcs):
        mid = 0.5 * (arc.t_start + arc.t_end)
        vals = profile.arc_values(k, mid)
        values.append(float(adjoined_hamiltonian(arc.control(mid), arc.speed(mid), vals, lim)))
    return CostateProfile(**{**profile.__dict__, "hamiltonian": tuple(values)})


def _check_signs(traj: PiecewiseTrajectory, profile: CostateProfile) -> None:
    for k, arc in enumerate(traj.arcs):
        ts = np.array([arc.t_start, arc.t_end])
        vals = profile.arc_values(k, ts)
        for name in ("mu_a", "mu_b", "eta_c", "eta_d"):
            worst = float(np.min(vals[name]))
            if worst < -1e-9 * max(1.0, float(np.max(np.abs(vals[name])))):
                raise InconsistentCase(
                    f"{name} = {worst:.3e} < 0 on {arc.kind.value} arc "
                    f"[{arc.t_start:.6g}, {arc.t_end:.6g}]")


def _finish(bc, lim, pieces, a_star, b_star):
    traj, profile = _assemble(bc, pieces, a_star, b_star)
    traj.check_continuity()
    _check_signs(traj, profile)
    return traj, _with_hamiltonian(traj, profile, lim)


def _unconstrained(bc: BoundaryConditions, lim: Limits):
    a, b = unconstrained_coefficients(bc.distance, bc.horizon, bc.v0)
    return _finish(bc, lim, [_Piece(ArcKind.UNCONSTRAINED, 0.0, bc.horizon, a, b)], a, b)


def _slack(bc: BoundaryConditions, speed_bound: float = math.nan,
           control_bound: float = math.nan) -> bool:
    """Whether the unconstrained arc already respects the given bound."""
    a, b = unconstrained_coefficients(bc.distance, bc.horizon, bc.v0)
    if not math.isnan(control_bound):
        return b < control_bound if control_bound > 0 else b > control_bound
    v_end = bc.v0 + 0.5 * b * bc.horizon
    return v_end < speed_bound if speed_bound >= bc.v0 else v_end > speed_bound


def _speed_case(bc: BoundaryConditions, lim: Limits, v_bound: float, kind: ArcKind):
    T = bc.horizon
    if _slack(bc, speed_bound=v_bound):
        return _unconstrained(bc, lim)
    tau = speed_entry_time(bc.distance, T, bc.v0, v_bound)
    if tau < MIN_ARC:
        raise InconsistentCase("speed arc would start at entry with a speed jump")
    a = 2.0 * (bc.v0 - v_bound) / tau ** 2
    b = -a * tau
    pieces = [_Piece(ArcKind.UNCONSTRAINED, 0.0, tau, a, b),
              _Piece(kind, tau, T, 0.0, 0.0, speed=v_bound)]
    return _finish(bc, lim, pieces, a, b)


def _control_case(bc: BoundaryConditions, lim: Limits, u_bound: float, kind: ArcKind):
    T = bc.horizon
    if _slack(bc, control_bound=u_bound):
        return _unconstrained(bc, lim)
    tau = control_exit_time(bc.distance, T, bc.v0, u_bound)
    rest = T - tau
    if rest < MIN_ARC:
        # The bound is held over the whole horizon; only the envelope edge does this.
        a_star, b_star = 0.0, u_bound
        pieces = [_Piece(kind, 0.0, T, 0.0, u_bound)]
    else:
        a_star = -u_bound / rest
        b_star = -a_star * T
        pieces = [_Piece(kind, 0.0, tau, 0.0, u_bound),
                  _Piece(ArcKind.UNCONSTRAINED, tau, T, a_star, b_star)]
    return _finish(bc, lim, pieces, a_star, b_star)


def _double_case(bc: BoundaryConditions, lim: Limits, v_bound: float, u_bound: float,
                 control_kind: ArcKind, speed_kind: ArcKind):
    T = bc.horizon
    tau_c, tau_s = double_junction_times(bc.distance, T, bc.v0, v_bound, u_bound)
    m = tau_s - tau_c
    if m < MIN_ARC:
        a_star, b_star = 0.0, 0.0
    else:
        a_star = -u_bound / m
        b_star = -a_star * tau_s
    pieces = [_Piece(control_kind, 0.0, tau_c, 0.0, u_bound),
              _Piece(ArcKind.UNCONSTRAINED, tau_c, tau_s, a_star, b_star),
              _Piece(speed_kind, tau_s, T, 0.0, 0.0, speed=v_bound)]
    return _finish(bc, lim, pieces, a_star, b_star)


def solve_unconstrained_case(bc: BoundaryConditions, lim: Limits | None = None):
    return _unconstrained(bc, lim or Limits())


def solve_case1(bc: BoundaryConditions, lim: Limits):
    """Unconstrained arc into a terminal arc at the upper speed bound."""
    return _speed_case(bc, lim, lim.vmax, ArcKind.SPEED_MAX)


def solve_case2(bc: BoundaryConditions, lim: Limits):
    """Initial arc at the upper control bound, then an unconstrained arc."""
    return _control_case(bc, lim, lim.umax, ArcKind.CONTROL_MAX)


def solve_case3(bc: BoundaryConditions, lim: Limits):
    return _double_case(bc, lim, lim.vmax, lim.umax, ArcKind.CONTROL_MAX, ArcKind.SPEED_MAX)


def solve_case4(bc: BoundaryConditions, lim: Limits):
    return _speed_case(bc, lim, lim.vmin, ArcKind.SPEED_MIN)


def solve_case5(bc: BoundaryConditions, lim: Limits):
    return _control_case(bc, lim, lim.umin, ArcKind.CONTROL_MIN)


def solve_case6(bc: BoundaryConditions, lim: Limits):
    return _double_case(bc, lim, lim.vmin, lim.umin, ArcKind.CONTROL_MIN, ArcKind.SPEED_MIN)


_SOLVERS = {
    ConstraintCase.UNCONSTRAINED: solve_unconstrained_case,
    ConstraintCase.VMAX_ONLY: solve_case1,
    ConstraintCase.UMAX_ONLY: solve_case2,
    ConstraintCase.UMAX_AND_VMAX: solve_case3,
    ConstraintCase.VMIN_ONLY: solve_case4,
    ConstraintCase.UMIN_ONLY: solve_case5,
    ConstraintCase.UMIN_AND_VMIN: solve_case6,
}


def solve_case(bc: BoundaryConditions, lim: Limits, case: ConstraintCase):
    return _SOLVERS[case](bc, lim)


def solve(bc: BoundaryConditions, lim: Limits) -> tuple[PiecewiseTrajectory, CostateProfile]:
    """Classify once, then build the matching construction."""
    check_feasible(bc, lim)
    case = classify(bc, lim)
    return solve_case(bc, lim, case)


# --------------------------------------------------------------------------- KKT

@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    error: str = ""

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, ok in self.checks.items() if not ok]

    def _record(self, name: str, residual: float, tol: float) -> None:
        self.residuals[name] = residual
        self.checks[name] = bool(residual <= tol)


KKT_CHECKS = ("stationarity", "complementary_slackness", "multiplier_sign",
              "terminal_costate", "hamiltonian_continuity", "primal_feasibility")


def validate_kkt(traj: PiecewiseTrajectory, profile: CostateProfile, bc: BoundaryConditions,
                 lim: Limits, tol: float = KKT_TOL, samples_per_arc: int = 41
                 ) -> ValidationReport:
    """Check first-order optimality of ``traj`` against ``profile``. Never raises."""
    report = ValidationReport()
    try:
        _run_checks(report, traj, profile, bc, lim, tol, samples_per_arc)
    except Exception as exc:  # a malformed input is a failed validation
        for name in KKT_CHECKS:
            report.checks.setdefault(name, False)
            report.residuals.setdefault(name, math.inf)
        report.checks["evaluation"] = False
        report.residuals["evaluation"] = math.inf
        report.error = repr(exc)
    return report


def _bound_gap(value, bound):
    return np.zeros_like(value) if not math.isfinite(bound) else value - bound


def _run_checks(report, traj, profile, bc, lim, tol, samples_per_arc):
    if profile.n_arcs != len(traj.arcs):
        raise ValueError("profile and trajectory arc counts differ")
    stat = slack = sign = primal = 0.0
    h_ends: list[tuple[float, float]] = []
    for k, arc in enumerate(traj.arcs):
        ts = np.linspace(arc.t_start, arc.t_end, samples_per_arc)
        u, v = arc.control(ts), arc.speed(ts)
        vals = profile.arc_values(k, ts)
        stat = max(stat, float(np.max(np.abs(u + vals["lambda_v"] + vals["mu_a"] - vals["mu_b"]))))
        pairs = (
            (vals["mu_a"], _bound_gap(u, lim.umax), lim.umax),
            (vals["mu_b"], -_bound_gap(u, lim.umin), lim.umin),
            (vals["eta_c"], _bound_gap(v, lim.vmax), lim.vmax),
            (vals["eta_d"], -_bound_gap(v, lim.vmin), lim.vmin),
        )
        for mult, gap, bound in pairs:
            if math.isfinite(bound):
                slack = max(slack, float(np.max(np.abs(mult * gap))))
            else:
                slack = max(slack, float(np.max(np.abs(mult))))
            sign = max(sign, float(np.max(-mult)))
        over = max(float(np.max(u - lim.umax)), float(np.max(lim.umin - u)),
                   float(np.max(v - lim.vmax)), float(np.max(lim.vmin - v)))
        primal = max(primal, over)
        h = adjoined_hamiltonian(u, v, vals, lim)
        h_ends.append((float(h[0]), float(h[-1])))
    report._record("stationarity", stat, tol)
    report._record("complementary_slackness", slack, tol)
    report._record("multiplier_sign", sign, tol)
    last = len(traj.arcs) - 1
    lam_end = float(profile.arc_values(last, traj.t_end)["lambda_v"])
    report._record("terminal_costate", abs(lam_end), tol)
    jump = 0.0
    for k in range(last):
        jump = max(jump, abs(h_ends[k][1] - h_ends[k + 1][0]))
    for start, end in h_ends:  # autonomous problem: H is constant along each arc
        jump = max(jump, abs(end - start))
    report._record("hamiltonian_continuity", jump, tol)
    p_end = float(traj.eval(traj.t_end)[0])
    p_start, v_start, _ = traj.eval(traj.t_start)
    gaps = [abs(p_end - bc.pm), abs(p_start - bc.p0), abs(v_start - bc.v0),
            abs(traj.t_start - bc.t0), abs(traj.t_end - bc.tm)]
    gaps.extend(max(dp, dv) for _, dp, dv, _ in traj.continuity_residuals())
    report._record("primal_feasibility", max(primal, max(gaps)), tol)


def perturbed(traj: PiecewiseTrajectory, delta: float = 1e-3, arc_index: int = 0,
              coefficient: str = "b") -> PiecewiseTrajectory:
    """Copy of ``traj`` with one arc coefficient shifted by ``delta``."""
    arcs = list(traj.arcs)
    arc = arcs[arc_index]
    arcs[arc_index] = PolyArc(**{**arc.__dict__, coefficient: getattr(arc, coefficient) + delta})
    return PiecewiseTrajectory(arcs=tuple(arcs), case=traj.case)
