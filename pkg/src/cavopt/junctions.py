"""Junction times of the constrained constructions.

The private helpers work in shifted coordinates (entry at t = 0, p = 0) and
take the relevant bound explicitly, so the same algebra serves the upper and
the lower side. The public functions return absolute times.
"""

from __future__ import annotations

import math

from cavopt.core import BoundaryConditions, Limits
from cavopt.errors import InconsistentCase

#: Junctions may fall this far outside their admissible window (seconds) before
#: the construction is declared inconsistent; they are then clamped.
JUNCTION_TOL = 1e-9


def _clamp(value: float, lo: float, hi: float, what: str) -> float:
    if not (lo - JUNCTION_TOL <= value <= hi + JUNCTION_TOL):
        raise InconsistentCase(f"{what}={value:.12g} outside [{lo:.12g}, {hi:.12g}]")
    return min(max(value, lo), hi)


def speed_entry_time(distance: float, horizon: float, v0: float, v_bound: float) -> float:
    """Relative entry time of a terminal speed arc preceded by an unconstrained arc."""
    denom = v0 - v_bound
    if denom == 0.0:
        raise InconsistentCase("entry speed equals the speed bound; junction undefined")
    tau = 3.0 * (distance - v_bound * horizon) / denom
    return _clamp(tau, 0.0, horizon, "speed-arc entry")


def control_exit_time(distance: float, horizon: float, v0: float, u_bound: float) -> float:
    """Relative exit time of an initial control arc followed by an unconstrained arc."""
    radicand = (3.0 * horizon ** 2 * u_bound + 6.0 * horizon * v0 - 6.0 * distance) / u_bound
    if radicand < 0.0:
        if radicand > -JUNCTION_TOL * horizon ** 2:
            radicand = 0.0
        else:
            raise InconsistentCase(f"control-arc junction radicand {radicand:.6g} < 0")
    tau = horizon - math.sqrt(radicand)
    return _clamp(tau, 0.0, horizon, "control-arc exit")


def double_junction_times(distance: float, horizon: float, v0: float,
                          v_bound: float, u_bound: float) -> tuple[float, float]:
    """Relative (control exit, speed entry) for control arc -> unconstrained -> speed arc.

    The middle arc ramps the control linearly from ``u_bound`` to zero over
    ``m`` seconds. Matching the speed gain fixes the control-arc length in
    terms of ``m``; matching the distance then gives
    m^2 = 24 (E - dv^2 / (2 u)) / u with dv = v_bound - v0 and
    E = v_bound * horizon - distance.
    """
    dv = v_bound - v0
    excess = v_bound * horizon - distance
    m_sq = 24.0 * (excess - dv * dv / (2.0 * u_bound)) / u_bound
    if m_sq < 0.0:
        if m_sq > -JUNCTION_TOL:
            m_sq = 0.0
        else:
            raise InconsistentCase(f"middle-arc length squared {m_sq:.6g} < 0")
    m = math.sqrt(m_sq)
    tau_c = dv / u_bound - 0.5 * m
    tau_c = _clamp(tau_c, 0.0, horizon, "control-arc exit")
    tau_s = _clamp(tau_c + m, tau_c, horizon, "speed-arc entry")
    return tau_c, tau_s


def junction_vmax(bc: BoundaryConditions, lim: Limits) -> float:
    return bc.t0 + speed_entry_time(bc.distance, bc.horizon, bc.v0, lim.vmax)


def junction_vmin(bc: BoundaryConditions, lim: Limits) -> float:
    return bc.t0 + speed_entry_time(bc.distance, bc.horizon, bc.v0, lim.vmin)


def junction_umax(bc: BoundaryConditions, lim: Limits) -> float:
    return bc.t0 + control_exit_time(bc.distance, bc.horizon, bc.v0, lim.umax)


def junction_umin(bc: BoundaryConditions, lim: Limits) -> float:
    return bc.t0 + control_exit_time(bc.distance, bc.horizon, bc.v0, lim.umin)


def junctions_case3(bc: BoundaryConditions, lim: Limits) -> tuple[float, float]:
    tc, ts = double_junction_times(bc.distance, bc.horizon, bc.v0, lim.vmax, lim.umax)
    return bc.t0 + tc, bc.t0 + ts


def junctions_case6(bc: BoundaryConditions, lim: Limits) -> tuple[float, float]:
    tc, ts = double_junction_times(bc.distance, bc.horizon, bc.v0, lim.vmin, lim.umin)
    return bc.t0 + tc, bc.t0 + ts
