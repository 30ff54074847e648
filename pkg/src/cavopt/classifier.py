"""A-priori selection of the active-constraint case, without trial solves."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from cavopt.core import (BoundaryConditions, ConstraintCase, Limits, is_feasible,
                         reachable_envelope)
from cavopt.errors import InconsistentCase, Infeasible
from cavopt.junctions import control_exit_time, speed_entry_time
from cavopt.unconstrained import Slope, slope_of, terminal_speed, unconstrained_coefficients

__all__ = [
    "ActivationThresholds", "ConstraintCase", "Side", "activation_thresholds", "classify",
    "coupled_umax_given_vmax", "coupled_umin_given_vmin", "coupled_vmax_given_umax",
    "coupled_vmin_given_umin", "exclusion_side", "margins", "printed_speed_given_control",
    "umax_active", "umin_active", "vmax_active", "vmin_active",
]


#: Relative band within which a threshold comparison counts as a tie (tie = active).
TIE_RTOL = 1e-12


def _le(x: float, y: float) -> bool:
    return x <= y + TIE_RTOL * max(abs(x), abs(y))


class Side(str, enum.Enum):
    MAX_SIDE = "MaxSide"
    MIN_SIDE = "MinSide"
    NEITHER = "Neither"


@dataclass(frozen=True)
class ActivationThresholds:
    """Horizon lengths (s, relative to t0) at which each bound starts to bind.

    ``tm_umin_upper`` closes the window for the lower control bound: it binds
    only for horizons in [tm_umin, tm_umin_upper]. Missing thresholds are NaN.
    """

    tm_vmax: float
    tm_umax: float
    tm_vmin: float
    tm_umin: float
    tm_umin_upper: float


def exclusion_side(bc: BoundaryConditions) -> Side:
    slope = slope_of(bc)
    if slope is Slope.DECREASING:
        return Side.MAX_SIDE
    if slope is Slope.INCREASING:
        return Side.MIN_SIDE
    return Side.NEITHER


def _speed_threshold(distance: float, v0: float, v_bound: float) -> float:
    return 3.0 * distance / (v0 + 2.0 * v_bound)


def _upper_control_threshold(distance: float, v0: float, u_bound: float) -> float:
    return (-3.0 * v0 + math.sqrt(9.0 * v0 * v0 + 12.0 * u_bound * distance)) / (2.0 * u_bound)


def _lower_control_window(distance: float, v0: float, u_bound: float) -> tuple[float, float] | None:
    """Horizons for which a negative control bound binds, or None if never."""
    disc = 9.0 * v0 * v0 + 12.0 * u_bound * distance
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    return (-3.0 * v0 + root) / (2.0 * u_bound), (-3.0 * v0 - root) / (2.0 * u_bound)


def _control_binds(horizon: float, distance: float, v0: float, u_bound: float) -> bool:
    """Whether the unconstrained arc over (horizon, distance) reaches ``u_bound`` at entry."""
    if not math.isfinite(u_bound):
        return False
    if u_bound > 0.0:
        return _le(horizon, _upper_control_threshold(distance, v0, u_bound))
    window = _lower_control_window(distance, v0, u_bound)
    if window is None:
        return False
    return _le(window[0], horizon) and _le(horizon, window[1])


def activation_thresholds(bc: BoundaryConditions, lim: Limits) -> ActivationThresholds:
    L, v0 = bc.distance, bc.v0
    nan = math.nan
    tm_vmax = _speed_threshold(L, v0, lim.vmax) if math.isfinite(lim.vmax) else nan
    tm_umax = _upper_control_threshold(L, v0, lim.umax) if math.isfinite(lim.umax) else nan
    tm_vmin = _speed_threshold(L, v0, lim.vmin)
    window = _lower_control_window(L, v0, lim.umin) if math.isfinite(lim.umin) else None
    lo, hi = window if window is not None else (nan, nan)
    return ActivationThresholds(tm_vmax, tm_umax, tm_vmin, lo, hi)


def vmax_active(bc: BoundaryConditions, lim: Limits) -> bool:
    if not math.isfinite(lim.vmax):
        return False
    return _le(bc.horizon, _speed_threshold(bc.distance, bc.v0, lim.vmax))


def umax_active(bc: BoundaryConditions, lim: Limits) -> bool:
    return _control_binds(bc.horizon, bc.distance, bc.v0, lim.umax)


def vmin_active(bc: BoundaryConditions, lim: Limits) -> bool:
    return _le(_speed_threshold(bc.distance, bc.v0, lim.vmin), bc.horizon)


def umin_active(bc: BoundaryConditions, lim: Limits) -> bool:
    return _control_binds(bc.horizon, bc.distance, bc.v0, lim.umin)


def _control_given_speed(bc: BoundaryConditions, v_bound: float, u_bound: float,
                         tau_s: float) -> bool:
    # The arc before the speed arc is the unconstrained solution of the
    # sub-problem ending at tau_s with the position the speed arc requires there.
    span = tau_s - bc.t0
    reached = bc.distance - v_bound * (bc.tm - tau_s)
    return _control_binds(span, reached, bc.v0, u_bound)


def coupled_umax_given_vmax(bc: BoundaryConditions, lim: Limits, tau_s: float) -> bool:
    """Whether the upper control bound binds once the upper speed arc is in place."""
    if not math.isfinite(lim.vmax):
        raise ValueError("upper speed bound is not imposed")
    return _control_given_speed(bc, lim.vmax, lim.umax, tau_s)


def coupled_umin_given_vmin(bc: BoundaryConditions, lim: Limits, tau_s: float) -> bool:
    return _control_given_speed(bc, lim.vmin, lim.umin, tau_s)


def _speed_given_control(bc: BoundaryConditions, v_bound: float, u_bound: float,
                         tau_c: float) -> bool:
    # Extreme speed of the control-arc construction is reached at tm and
    # equals v(tau_c) + u_bound * (tm - tau_c) / 2.
    if not (math.isfinite(v_bound) and math.isfinite(u_bound)):
        return False
    v_tc = bc.v0 + u_bound * (tau_c - bc.t0)
    return _le(tau_c + 2.0 * (v_bound - v_tc) / u_bound, bc.tm)


def coupled_vmax_given_umax(bc: BoundaryConditions, lim: Limits, tau_c: float) -> bool:
    """Whether the upper speed bound binds once the upper control arc is in place."""
    return _speed_given_control(bc, lim.vmax, lim.umax, tau_c)


def coupled_vmin_given_umin(bc: BoundaryConditions, lim: Limits, tau_c: float) -> bool:
    return _speed_given_control(bc, lim.vmin, lim.umin, tau_c)


def printed_speed_given_control(bc: BoundaryConditions, v_bound: float, u_bound: float,
                                tau_c: float) -> bool:
    """The speed-after-control test with the bound and v(tau_c) swapped.

    Kept for diagnostics only; :func:`coupled_vmax_given_umax` is the
    condition the solver uses.
    """
    v_tc = bc.v0 + u_bound * (tau_c - bc.t0)
    return bc.tm >= tau_c + 2.0 * (v_tc - v_bound) / u_bound


def _select(bc: BoundaryConditions, v_bound: float, u_bound: float, speed_on: bool,
            control_on: bool, cases: tuple[ConstraintCase, ConstraintCase, ConstraintCase]
            ) -> ConstraintCase:
    speed_only, control_only, both = cases
    if speed_on and control_on:
        return both
    if speed_on:
        tau_s = bc.t0 + speed_entry_time(bc.distance, bc.horizon, bc.v0, v_bound)
        return both if _control_given_speed(bc, v_bound, u_bound, tau_s) else speed_only
    if control_on:
        tau_c = bc.t0 + control_exit_time(bc.distance, bc.horizon, bc.v0, u_bound)
        return both if _speed_given_control(bc, v_bound, u_bound, tau_c) else control_only
    return ConstraintCase.UNCONSTRAINED


def check_feasible(bc: BoundaryConditions, lim: Limits) -> None:
    if not lim.admits(bc.v0):
        raise Infeasible(f"entry speed {bc.v0} outside [{lim.vmin}, {lim.vmax}]")
    if not is_feasible(bc, lim):
        lo, hi = reachable_envelope(bc, lim)
        raise Infeasible(f"distance {bc.distance:.6g} m outside reachable envelope "
                         f"[{lo:.6g}, {hi:.6g}] m")


def classify(bc: BoundaryConditions, lim: Limits) -> ConstraintCase:
    check_feasible(bc, lim)
    side = exclusion_side(bc)
    if side is Side.MAX_SIDE:
        return _select(bc, lim.vmax, lim.umax, vmax_active(bc, lim), umax_active(bc, lim),
                       (ConstraintCase.VMAX_ONLY, ConstraintCase.UMAX_ONLY,
                        ConstraintCase.UMAX_AND_VMAX))
    if side is Side.MIN_SIDE:
        return _select(bc, lim.vmin, lim.umin, vmin_active(bc, lim), umin_active(bc, lim),
                       (ConstraintCase.VMIN_ONLY, ConstraintCase.UMIN_ONLY,
                        ConstraintCase.UMIN_AND_VMIN))
    return ConstraintCase.UNCONSTRAINED


def margins(bc: BoundaryConditions, lim: Limits) -> dict[str, float]:
    """Signed distances (native units) from each activation boundary.

    Positive means the bound is violated by the construction the test looks
    at: the unconstrained arc for the single-bound tests, the speed-arc or
    control-arc construction for the coupled tests. Used to explain
    disagreements with the numerical optimum near thresholds.
    """
    _, b = unconstrained_coefficients(bc.distance, bc.horizon, bc.v0)
    v_end = terminal_speed(bc)
    out = {
        "umax": b - lim.umax,
        "umin": lim.umin - b,
        "vmax": v_end - lim.vmax,
        "vmin": lim.vmin - v_end,
    }
    sides = (("umax_given_vmax", "vmax_given_umax", lim.vmax, lim.umax, 1.0),
             ("umin_given_vmin", "vmin_given_umin", lim.vmin, lim.umin, -1.0))
    for ctl_key, spd_key, v_bound, u_bound, sgn in sides:
        if math.isfinite(v_bound) and bc.v0 != v_bound:
            try:
                tau = speed_entry_time(bc.distance, bc.horizon, bc.v0, v_bound)
                b1 = 2.0 * (v_bound - bc.v0) / tau if tau > 0 else math.inf
                out[ctl_key] = sgn * (b1 - u_bound)
            except InconsistentCase:
                pass
        if math.isfinite(u_bound) and math.isfinite(v_bound):
            try:
                tau = control_exit_time(bc.distance, bc.horizon, bc.v0, u_bound)
                peak = bc.v0 + u_bound * tau + 0.5 * u_bound * (bc.horizon - tau)
                out[spd_key] = sgn * (peak - v_bound)
            except InconsistentCase:
                pass
    return out
