"""Domain types, arc evaluation, the energy functional and the reachability gate.

Time is stored absolute everywhere. Each arc additionally carries the
``origin`` its polynomial coefficients refer to (the vehicle's entry time), so
a polynomial in ``t - origin`` is evaluated and the closed forms derived with
the entry time at zero apply unchanged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cavopt.errors import DomainError, InconsistentCase

#: Continuity tolerance for analytic output (m, m/s).
CONTINUITY_TOL = 1e-9
#: Slack allowed when an evaluation time lands just outside an arc window.
WINDOW_TOL = 1e-9


class ArcKind(str, enum.Enum):
    UNCONSTRAINED = "Unconstrained"
    CONTROL_MAX = "ControlMax"
    CONTROL_MIN = "ControlMin"
    SPEED_MAX = "SpeedMax"
    SPEED_MIN = "SpeedMin"

    @property
    def is_control(self) -> bool:
        return self in (ArcKind.CONTROL_MAX, ArcKind.CONTROL_MIN)

    @property
    def is_speed(self) -> bool:
        return self in (ArcKind.SPEED_MAX, ArcKind.SPEED_MIN)


class ConstraintCase(str, enum.Enum):
    """Final active-constraint combination of an optimal trajectory."""

    UNCONSTRAINED = "Unconstrained"
    VMAX_ONLY = "VmaxOnly"
    UMAX_ONLY = "UmaxOnly"
    UMAX_AND_VMAX = "UmaxAndVmax"
    VMIN_ONLY = "VminOnly"
    UMIN_ONLY = "UminOnly"
    UMIN_AND_VMIN = "UminAndVmin"

    @property
    def is_max_side(self) -> bool:
        return self in (ConstraintCase.VMAX_ONLY, ConstraintCase.UMAX_ONLY,
                        ConstraintCase.UMAX_AND_VMAX)

    @property
    def is_min_side(self) -> bool:
        return self in (ConstraintCase.VMIN_ONLY, ConstraintCase.UMIN_ONLY,
                        ConstraintCase.UMIN_AND_VMIN)

    @property
    def speed_active(self) -> bool:
        return self in (ConstraintCase.VMAX_ONLY, ConstraintCase.UMAX_AND_VMAX,
                        ConstraintCase.VMIN_ONLY, ConstraintCase.UMIN_AND_VMIN)

    @property
    def control_active(self) -> bool:
        return self in (ConstraintCase.UMAX_ONLY, ConstraintCase.UMAX_AND_VMAX,
                        ConstraintCase.UMIN_ONLY, ConstraintCase.UMIN_AND_VMIN)


@dataclass(frozen=True)
class BoundaryConditions:
    """Entry/exit times and positions plus entry speed for one control-zone transit."""

    t0: float
    tm: float
    p0: float
    pm: float
    v0: float

    def __post_init__(self):
        if not (self.t0 >= 0.0 and self.tm > self.t0):
            raise ValueError(f"need tm > t0 >= 0, got t0={self.t0}, tm={self.tm}")
        if not self.pm > self.p0:
            raise ValueError(f"need pm > p0, got p0={self.p0}, pm={self.pm}")
        if not self.v0 > 0.0:
            raise ValueError(f"need v0 > 0, got {self.v0}")

    @property
    def horizon(self) -> float:
        return self.tm - self.t0

    @property
    def distance(self) -> float:
        return self.pm - self.p0

    @classmethod
    def from_horizon(cls, distance: float, horizon: float, v0: float,
                     t0: float = 0.0, p0: float = 0.0) -> "BoundaryConditions":
        return cls(t0=t0, tm=t0 + horizon, p0=p0, pm=p0 + distance, v0=v0)


@dataclass(frozen=True)
class Limits:
    """Speed and acceleration box. Infinite bounds mean "not imposed"."""

    vmin: float = 0.0
    vmax: float = math.inf
    umin: float = -math.inf
    umax: float = math.inf

    def __post_init__(self):
        if not (0.0 <= self.vmin < self.vmax):
            raise ValueError(f"need 0 <= vmin < vmax, got {self.vmin}, {self.vmax}")
        if not (self.umin < 0.0 < self.umax):
            raise ValueError(f"need umin < 0 < umax, got {self.umin}, {self.umax}")

    def admits(self, v0: float) -> bool:
        return self.vmin <= v0 <= self.vmax


@dataclass(frozen=True)
class PolyArc:
    """One arc: u = a s + b, v = a s^2/2 + b s + c, p = a s^3/6 + b s^2/2 + c s + d,
    with s = t - origin, valid on [t_start, t_end]."""

    a: float
    b: float
    c: float
    d: float
    t_start: float
    t_end: float
    kind: ArcKind = ArcKind.UNCONSTRAINED
    origin: float = 0.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"arc needs t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t >= self.t_start - WINDOW_TOL) & (t <= self.t_end + WINDOW_TOL)

    def position(self, t):
        s = np.asarray(t, dtype=float) - self.origin
        return ((self.a / 6.0 * s + self.b / 2.0) * s + self.c) * s + self.d

    def speed(self, t):
        s = np.asarray(t, dtype=float) - self.origin
        return (self.a / 2.0 * s + self.b) * s + self.c

    def control(self, t):
        s = np.asarray(t, dtype=float) - self.origin
        return self.a * s + self.b

    def energy(self, t1: float | None = None, t2: float | None = None) -> float:
        """Closed-form integral of u^2/2 over [t1, t2] (defaults to the window)."""
        s1 = (self.t_start if t1 is None else t1) - self.origin
        s2 = (self.t_end if t2 is None else t2) - self.origin
        a, b = self.a, self.b
        return 0.5 * (a * a * (s2 ** 3 - s1 ** 3) / 3.0
                      + a * b * (s2 ** 2 - s1 ** 2) + b * b * (s2 - s1))


def eval_arc(arc: PolyArc, t):
    """Return (position, speed, control) of ``arc`` at ``t``.

    Raises DomainError if any ``t`` lies outside the arc's window.
    """
    if not np.all(arc.contains(t)):
        raise DomainError(f"t={t} outside arc window [{arc.t_start}, {arc.t_end}]")
    p, v, u = arc.position(t), arc.speed(t), arc.control(t)
    if np.ndim(t) == 0:
        return float(p), float(v), float(u)
    return p, v, u


@dataclass(frozen=True)
class PiecewiseTrajectory:
    arcs: tuple[PolyArc, ...]
    case: ConstraintCase

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        if not self.arcs:
            raise ValueError("trajectory needs at least one arc")
        for left, right in zip(self.arcs, self.arcs[1:]):
            if abs(left.t_end - right.t_start) > WINDOW_TOL:
                raise ValueError(f"arcs not contiguous at {left.t_end} / {right.t_start}")

    @property
    def junctions(self) -> tuple[float, ...]:
        return tuple(arc.t_end for arc in self.arcs[:-1])

    @property
    def kinds(self) -> tuple[ArcKind, ...]:
        return tuple(arc.kind for arc in self.arcs)

    @property
    def t_start(self) -> float:
        return self.arcs[0].t_start

    @property
    def t_end(self) -> float:
        return self.arcs[-1].t_end

    def arc_index(self, t) -> np.ndarray:
        """Index of the arc owning each time; junctions belong to the later arc."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_start - WINDOW_TOL) or np.any(t > self.t_end + WINDOW_TOL):
            raise DomainError(f"t outside trajectory window [{self.t_start}, {self.t_end}]")
        return np.searchsorted(np.asarray(self.junctions), t, side="right")

    def eval(self, t):
        """Return (position, speed, control) arrays (scalars for scalar t)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self.arc_index(t_arr)
        p = np.empty_like(t_arr)
        v = np.empty_like(t_arr)
        u = np.empty_like(t_arr)
        for k, arc in enumerate(self.arcs):
            sel = idx == k
            if np.any(sel):
                ts = t_arr[sel]
                p[sel], v[sel], u[sel] = arc.position(ts), arc.speed(ts), arc.control(ts)
        if np.ndim(t) == 0:
            return float(p[0]), float(v[0]), float(u[0])
        return p, v, u

    def sample_times(self, dt: float) -> np.ndarray:
        """Uniform grid at ``dt`` plus both ends and every junction."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        n = int(math.floor((self.t_end - self.t_start) / dt + 1e-9))
        grid = self.t_start + dt * np.arange(n + 1)
        extra = np.array([self.t_start, self.t_end, *self.junctions])
        times = np.unique(np.concatenate([grid[grid < self.t_end], extra]))
        return times

    def continuity_residuals(self) -> list[tuple[float, float, float, float]]:
        """(junction, |dp|, |dv|, |du|) at each junction."""
        out = []
        for left, right in zip(self.arcs, self.arcs[1:]):
            tj = left.t_end
            out.append((tj,
                        abs(float(left.position(tj) - right.position(tj))),
                        abs(float(left.speed(tj) - right.speed(tj))),
                        abs(float(left.control(tj) - right.control(tj)))))
        return out

    def check_continuity(self, tol: float = CONTINUITY_TOL) -> None:
        for tj, dp, dv, _ in self.continuity_residuals():
            scale = max(1.0, abs(float(self.eval(tj)[0])))
            if dp > tol * scale or dv > tol * max(1.0, abs(float(self.eval(tj)[1]))):
                raise InconsistentCase(
                    f"state discontinuity at t={tj}: dp={dp:.3e}, dv={dv:.3e}")


def cost(traj: PiecewiseTrajectory) -> float:
    """Energy functional: integral of u^2/2 over the trajectory, in closed form."""
    return float(sum(arc.energy() for arc in traj.arcs))


@dataclass(frozen=True)
class CostateProfile:
    """Costates and multipliers reconstructed per arc.

    Per arc ``k``: ``lambda_p[k]`` is a constant; ``lambda_v[k]``, ``mu_a[k]``
    and ``mu_b[k]`` are affine in ``s = t - origin`` and stored as
    ``(slope, intercept)``; ``eta_c[k]`` and ``eta_d[k]`` are constants.
    ``hamiltonian[k]`` is the adjoined Hamiltonian sampled at the arc midpoint.
    """

    origin: float
    breaks: tuple[float, ...]
    lambda_p: tuple[float, ...]
    lambda_v: tuple[tuple[float, float], ...]
    mu_a: tuple[tuple[float, float], ...]
    mu_b: tuple[tuple[float, float], ...]
    eta_c: tuple[float, ...]
    eta_d: tuple[float, ...]
    pi_jump: float = 0.0
    hamiltonian: tuple[float, ...] = field(default=())

    @property
    def n_arcs(self) -> int:
        return len(self.lambda_p)

    def arc_values(self, k: int, t) -> dict[str, np.ndarray]:
        """Costates and multipliers of arc ``k`` at times ``t`` (one-sided at the ends)."""
        s = np.asarray(t, dtype=float) - self.origin
        ones = np.ones_like(s)
        lv_slope, lv_icpt = self.lambda_v[k]
        ma_slope, ma_icpt = self.mu_a[k]
        mb_slope, mb_icpt = self.mu_b[k]
        return {
            "lambda_p": self.lambda_p[k] * ones,
            "lambda_v": lv_slope * s + lv_icpt,
            "mu_a": ma_slope * s + ma_icpt,
            "mu_b": mb_slope * s + mb_icpt,
            "eta_c": self.eta_c[k] * ones,
            "eta_d": self.eta_d[k] * ones,
        }


def adjoined_hamiltonian(u, v, values: dict, lim: Limits):
    """Hamiltonian with every multiplier term; infinite bounds contribute nothing."""
    h = 0.5 * u * u + values["lambda_p"] * v + values["lambda_v"] * u
    if math.isfinite(lim.umax):
        h = h + values["mu_a"] * (u - lim.umax)
    if math.isfinite(lim.umin):
        h = h + values["mu_b"] * (lim.umin - u)
    if math.isfinite(lim.vmax):
        h = h + values["eta_c"] * (v - lim.vmax)
    h = h + values["eta_d"] * (lim.vmin - v)
    return h


def _bang_then_hold(v0: float, horizon: float, u: float, v_bound: float) -> float:
    """Distance when pushing at ``u`` until ``v_bound`` is reached, then holding it."""
    if not math.isfinite(u):
        if math.isfinite(v_bound):
            return v_bound * horizon
        return math.copysign(math.inf, u)
    if not math.isfinite(v_bound):
        return v0 * horizon + 0.5 * u * horizon ** 2
    t_switch = max(0.0, (v_bound - v0) / u)
    if t_switch >= horizon:
        return v0 * horizon + 0.5 * u * horizon ** 2
    return 0.5 * (v0 + v_bound) * t_switch + v_bound * (horizon - t_switch)


def reachable_envelope(bc: BoundaryConditions, lim: Limits) -> tuple[float, float]:
    """(min_distance, max_distance) coverable in [t0, tm] under ``lim``."""
    T = bc.horizon
    max_d = _bang_then_hold(bc.v0, T, lim.umax, lim.vmax)
    min_d = _bang_then_hold(bc.v0, T, lim.umin, lim.vmin)
    return min_d, max_d


def is_feasible(bc: BoundaryConditions, lim: Limits, rtol: float = 1e-12) -> bool:
    if not lim.admits(bc.v0):
        return False
    lo, hi = reachable_envelope(bc, lim)
    slack = rtol * max(1.0, bc.distance)
    return lo - slack <= bc.distance <= hi + slack


def trajectory_from_arcs(arcs: Sequence[PolyArc], case: ConstraintCase) -> PiecewiseTrajectory:
    return PiecewiseTrajectory(arcs=tuple(arcs), case=case)
