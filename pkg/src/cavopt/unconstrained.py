"""Closed-form minimum-energy arc with free terminal speed."""

from __future__ import annotations

import enum

from cavopt.core import ArcKind, BoundaryConditions, PolyArc

#: Relative band on |v0*T - L| / L inside which the slope is called flat.
FLAT_RTOL = 1e-12


class Slope(str, enum.Enum):
    DECREASING = "Decreasing"
    INCREASING = "Increasing"
    FLAT = "Flat"


def unconstrained_coefficients(distance: float, horizon: float, v0: float) -> tuple[float, float]:
    """(a, b) of u = a s + b meeting the distance with u(horizon) = 0."""
    a = 3.0 * (v0 * horizon - distance) / horizon ** 3
    return a, -a * horizon + 0.0  # avoid a signed zero when a == 0


def solve_unconstrained(bc: BoundaryConditions) -> PolyArc:
    a, b = unconstrained_coefficients(bc.distance, bc.horizon, bc.v0)
    return PolyArc(a=a, b=b, c=bc.v0, d=bc.p0, t_start=bc.t0, t_end=bc.tm,
                   kind=ArcKind.UNCONSTRAINED, origin=bc.t0)


def unconstrained_cost(bc: BoundaryConditions) -> float:
    """Energy of the unconstrained arc: 3 (v0 T - L)^2 / (2 T^3)."""
    T = bc.horizon
    return 1.5 * (bc.v0 * T - bc.distance) ** 2 / T ** 3


def terminal_speed(bc: BoundaryConditions) -> float:
    """Speed of the unconstrained arc at tm, which is its extreme speed."""
    return 1.5 * bc.distance / bc.horizon - 0.5 * bc.v0


def slope_of(bc: BoundaryConditions) -> Slope:
    gap = bc.v0 * bc.horizon - bc.distance
    if abs(gap) <= FLAT_RTOL * bc.distance:
        return Slope.FLAT
    return Slope.DECREASING if gap < 0 else Slope.INCREASING


def classify_slope(arc: PolyArc, bc: BoundaryConditions) -> Slope:
    """Direction of the unconstrained control, decided from the boundary data.

    ``arc`` is accepted for interface symmetry; the decision uses ``bc`` so
    that the flat band is applied to the exact quantity v0*T - L.
    """
    del arc
    return slope_of(bc)
