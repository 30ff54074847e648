"""Helpers shared by the test modules."""

from __future__ import annotations

import numpy as np

from cavopt.core import BoundaryConditions, Limits, PiecewiseTrajectory


def reflect(bc: BoundaryConditions, lim: Limits, c: float) -> tuple[BoundaryConditions, Limits]:
    """Speed reflection v -> c - v (positions p -> c t - p, control u -> -u)."""
    T = bc.horizon
    return (BoundaryConditions.from_horizon(c * T - bc.distance, T, c - bc.v0, t0=bc.t0),
            Limits(vmin=c - lim.vmax, vmax=c - lim.vmin, umin=-lim.umax, umax=-lim.umin))


def worst_violation(traj: PiecewiseTrajectory, lim: Limits, dt: float = 1e-3) -> float:
    """Largest bound excess (native units) on a uniform sample grid."""
    t = traj.sample_times(dt)
    _, v, u = traj.eval(t)
    return max(0.0, float(np.max(v - lim.vmax)), float(np.max(lim.vmin - v)),
               float(np.max(u - lim.umax)), float(np.max(lim.umin - u)))


def instance(L: float, T: float, v0: float, **bounds) -> tuple[BoundaryConditions, Limits]:
    return BoundaryConditions.from_horizon(L, T, v0), Limits(**bounds)
