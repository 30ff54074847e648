"""Independent numerical reference solutions.

``solve_numeric`` transcribes the problem on a uniform grid: piecewise-constant
control, piecewise-linear speed (so node bounds hold everywhere) and exact
trapezoidal position. Decision variables are the node speeds v_1..v_N, which
makes the Hessian and every constraint banded. The resulting convex QP is
solved by a primal-dual interior-point method with Mehrotra's
predictor-corrector; each Newton step is one banded Cholesky solve bordered
by the single terminal-position equality.

``junction_grid_search`` scans junction times over per-case arc templates
that impose only boundary and continuity conditions on state, not the
control-continuity or costate conditions the closed forms rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from cavopt.core import BoundaryConditions, ConstraintCase, Limits, is_feasible
from cavopt.errors import EmptyFeasibleSet, Infeasible, NonConverged
from cavopt.unconstrained import solve_unconstrained

#: Bound-activity tolerance in native units (m/s, m/s^2).
ACTIVE_TOL = 1e-3


@dataclass(frozen=True)
class TranscriptionGrid:
    n_steps: int
    dt: float
    controls: np.ndarray

    def __post_init__(self):
        if self.n_steps < 100:
            raise ValueError("transcription needs at least 100 steps")


@dataclass(frozen=True)
class DiscreteTrajectory:
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    grid: TranscriptionGrid
    iterations: int

    @property
    def u(self) -> np.ndarray:
        return self.grid.controls

    @property
    def cost(self) -> float:
        return float(0.5 * np.sum(self.u ** 2) * self.grid.dt)


@dataclass
class _Block:
    """Inequality block s = sign * (B x) - r >= 0 with B the identity or the difference map."""

    diff: bool
    sign: float
    r: np.ndarray


def _apply(x: np.ndarray, diff: bool) -> np.ndarray:
    if not diff:
        return x
    out = x.copy()
    out[1:] -= x[:-1]
    return out


def _apply_t(y: np.ndarray, diff: bool) -> np.ndarray:
    if not diff:
        return y
    out = y.copy()
    out[:-1] -= y[1:]
    return out


def _banded_system(inv_dt: float, w_ident: np.ndarray, w_diff: np.ndarray) -> np.ndarray:
    """Upper banded form of D^T diag(inv_dt + w_diff) D + diag(w_ident)."""
    c = inv_dt + w_diff
    n = c.size
    diag = c.copy()
    diag[:-1] += c[1:]
    diag += w_ident
    ab = np.zeros((2, n))
    ab[1] = diag
    ab[0, 1:] = -c[1:]
    return ab


def solve_numeric(bc: BoundaryConditions, lim: Limits, n_steps: int = 1000,
                  tol: float = 1e-10, max_iter: int = 200) -> DiscreteTrajectory:
    """Discrete minimum-energy trajectory on ``n_steps`` uniform steps."""
    if not is_feasible(bc, lim):
        raise Infeasible("instance outside the reachable envelope")
    N = int(n_steps)
    T, L, v0 = bc.horizon, bc.distance, bc.v0
    dt = T / N
    inv_dt = 1.0 / dt
    e0 = np.zeros(N)
    e0[0] = 1.0
    g = -inv_dt * v0 * e0
    a_eq = np.full(N, dt)
    a_eq[-1] = 0.5 * dt
    beta = L - 0.5 * dt * v0

    blocks: list[_Block] = [_Block(False, 1.0, np.full(N, lim.vmin))]
    if math.isfinite(lim.vmax):
        blocks.append(_Block(False, -1.0, np.full(N, -lim.vmax)))
    if math.isfinite(lim.umin):
        blocks.append(_Block(True, 1.0, lim.umin * dt + v0 * e0))
    if math.isfinite(lim.umax):
        blocks.append(_Block(True, -1.0, -(lim.umax * dt + v0 * e0)))

    # Start from the closed-form unconstrained speeds pulled inside the speed box.
    arc = solve_unconstrained(bc)
    t_nodes = bc.t0 + dt * np.arange(1, N + 1)
    x = np.asarray(arc.speed(t_nodes), dtype=float)
    lo = lim.vmin + 1e-3 * max(1.0, lim.vmin)
    hi = lim.vmax - 1e-3 * max(1.0, lim.vmax) if math.isfinite(lim.vmax) else math.inf
    x = np.clip(x, lo, hi) if hi > lo else np.full(N, 0.5 * (lim.vmin + lim.vmax))
    y = 0.0
    s = [np.maximum(blk.sign * _apply(x, blk.diff) - blk.r, 1e-2) for blk in blocks]
    z = [np.ones(N) for _ in blocks]
    m_total = N * len(blocks)

    def hx(v):
        return inv_dt * _apply_t(_apply(v, True), True)

    def residuals(x, y, s, z):
        r_d = hx(x) + g - a_eq * y
        for blk, zi in zip(blocks, z):
            r_d -= blk.sign * _apply_t(zi, blk.diff)
        r_p = float(a_eq @ x - beta)
        r_s = [si - blk.sign * _apply(x, blk.diff) + blk.r for blk, si in zip(blocks, s)]
        return r_d, r_p, r_s

    def direction(factor, r_d, r_p, r_s, r_c, s, z):
        rhs = -r_d
        for blk, si, zi, rsi, rci in zip(blocks, s, z, r_s, r_c):
            rhs -= blk.sign * _apply_t(rci / si - (zi / si) * rsi, blk.diff)
        w1 = cho_solve_banded((factor, False), rhs)
        w2 = cho_solve_banded((factor, False), a_eq)
        dy = (-r_p - a_eq @ w1) / (a_eq @ w2)
        dx = w1 + w2 * dy
        ds = [blk.sign * _apply(dx, blk.diff) - rsi for blk, rsi in zip(blocks, r_s)]
        dz = [-(rci + zi * dsi) / si for si, zi, dsi, rci in zip(s, z, ds, r_c)]
        return dx, dy, ds, dz

    def max_step(v, dv):
        neg = dv < 0
        if not np.any(neg):
            return 1.0
        return float(min(1.0, np.min(-v[neg] / dv[neg])))

    scale_d = 1.0 + np.max(np.abs(g))
    residual = math.inf
    for it in range(1, max_iter + 1):
        r_d, r_p, r_s = residuals(x, y, s, z)
        mu = sum(float(si @ zi) for si, zi in zip(s, z)) / m_total if m_total else 0.0
        residual = max(float(np.max(np.abs(r_d))) / scale_d, abs(r_p) / max(1.0, L),
                       max((float(np.max(np.abs(rs))) for rs in r_s), default=0.0), mu)
        if residual <= tol:
            break
        w_ident = np.zeros(N)
        w_diff = np.zeros(N)
        for blk, si, zi in zip(blocks, s, z):
            (w_diff if blk.diff else w_ident)[:] += zi / si
        factor = cholesky_banded(_banded_system(inv_dt, w_ident, w_diff), lower=False)
        if not blocks:
            dx, dy, _, _ = direction(factor, r_d, r_p, r_s, [], s, z)
            x, y = x + dx, y + dy
            continue
        r_c = [si * zi for si, zi in zip(s, z)]
        dx, dy, ds, dz = direction(factor, r_d, r_p, r_s, r_c, s, z)
        alpha = min(min(max_step(si, dsi) for si, dsi in zip(s, ds)),
                    min(max_step(zi, dzi) for zi, dzi in zip(z, dz)))
        mu_aff = sum(float((si + alpha * dsi) @ (zi + alpha * dzi))
                     for si, zi, dsi, dzi in zip(s, z, ds, dz)) / m_total
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        r_c = [si * zi + dsi * dzi - sigma * mu for si, zi, dsi, dzi in zip(s, z, ds, dz)]
        dx, dy, ds, dz = direction(factor, r_d, r_p, r_s, r_c, s, z)
        alpha = min(min(max_step(si, dsi) for si, dsi in zip(s, ds)),
                    min(max_step(zi, dzi) for zi, dzi in zip(z, dz)))
        alpha = min(1.0, 0.995 * alpha)
        x = x + alpha * dx
        y = y + alpha * dy
        s = [si + alpha * dsi for si, dsi in zip(s, ds)]
        z = [zi + alpha * dzi for zi, dzi in zip(z, dz)]
    else:
        raise NonConverged(f"interior-point iteration cap {max_iter} reached", residual)

    v = np.concatenate([[v0], x])
    u = np.diff(v) / dt
    p = bc.p0 + np.concatenate([[0.0], np.cumsum(0.5 * dt * (v[1:] + v[:-1]))])
    t = bc.t0 + dt * np.arange(N + 1)
    return DiscreteTrajectory(t=t, p=p, v=v, grid=TranscriptionGrid(N, dt, u), iterations=it)


def active_bounds(traj: DiscreteTrajectory, lim: Limits, tol: float = ACTIVE_TOL) -> frozenset[str]:
    """Names of the bounds the discrete optimum touches within ``tol``."""
    out = set()
    if math.isfinite(lim.vmax) and np.max(traj.v) >= lim.vmax - tol:
        out.add("vmax")
    if np.min(traj.v[1:]) <= lim.vmin + tol:
        out.add("vmin")
    if math.isfinite(lim.umax) and np.max(traj.u) >= lim.umax - tol:
        out.add("umax")
    if math.isfinite(lim.umin) and np.min(traj.u) <= lim.umin + tol:
        out.add("umin")
    return frozenset(out)


CASE_BOUNDS = {
    ConstraintCase.UNCONSTRAINED: frozenset(),
    ConstraintCase.VMAX_ONLY: frozenset({"vmax"}),
    ConstraintCase.UMAX_ONLY: frozenset({"umax"}),
    ConstraintCase.UMAX_AND_VMAX: frozenset({"umax", "vmax"}),
    ConstraintCase.VMIN_ONLY: frozenset({"vmin"}),
    ConstraintCase.UMIN_ONLY: frozenset({"umin"}),
    ConstraintCase.UMIN_AND_VMIN: frozenset({"umin", "vmin"}),
}


# --------------------------------------------------------------- grid search

@dataclass(frozen=True)
class JunctionEstimate:
    junctions: tuple[float, ...]
    cost: float


def _fit_arc(h, dv, dp, v_start):
    """Control line a s + b on [0, h] achieving speed gain dv and distance dp."""
    q = dp - v_start * h
    a = (6.0 * dv * h - 12.0 * q) / h ** 3
    b = dv / h - 0.5 * a * h
    return a, b


def _arc_energy(a, b, h):
    return 0.5 * (a * a * h ** 3 / 3.0 + a * b * h * h + b * b * h)


def _arc_admissible(a, b, h, v_start, lim, slack=1e-9):
    u0, u1 = b, a * h + b
    ok = (np.minimum(u0, u1) >= lim.umin - slack) & (np.maximum(u0, u1) <= lim.umax + slack)
    v_end = v_start + 0.5 * a * h * h + b * h
    with np.errstate(divide="ignore", invalid="ignore"):
        s_star = np.where(a != 0, -b / a, -1.0)
    inside = (s_star > 0) & (s_star < h)
    v_star = np.where(inside, v_start + 0.5 * a * s_star ** 2 + b * s_star, v_start)
    v_hi = np.maximum(np.maximum(v_start, v_end), v_star)
    v_lo = np.minimum(np.minimum(v_start, v_end), v_star)
    return ok & (v_hi <= lim.vmax + slack) & (v_lo >= lim.vmin - slack)


def _ticks(start: float, stop: float, step: float) -> np.ndarray:
    """Multiples of ``step`` in [start, stop], computed from integer indices."""
    lo = math.ceil(start / step - 1e-9)
    hi = math.floor(stop / step + 1e-9)
    return np.round(np.arange(lo, hi + 1) * step, 12)


def _scan_speed(bc, lim, v_bound, res):
    T, L, v0 = bc.horizon, bc.distance, bc.v0
    tau = _ticks(res, T, res)
    a, b = _fit_arc(tau, v_bound - v0, L - v_bound * (T - tau), v0)
    ok = _arc_admissible(a, b, tau, v0, lim)
    cost = np.where(ok, _arc_energy(a, b, tau), np.inf)
    return tau, cost


def _scan_control(bc, lim, u_bound, res):
    T, L, v0 = bc.horizon, bc.distance, bc.v0
    tau = _ticks(0.0, T - 0.5 * res, res)
    h = T - tau
    v_c = v0 + u_bound * tau
    p_c = v0 * tau + 0.5 * u_bound * tau ** 2
    # Free-end arc: control reaches zero at tm.
    a = 3.0 * (v_c * h - (L - p_c)) / h ** 3
    b = -a * h
    ok = _arc_admissible(a, b, h, v_c, lim)
    ok &= (v_c <= lim.vmax) & (v_c >= lim.vmin)
    cost = np.where(ok, 0.5 * u_bound ** 2 * tau + _arc_energy(a, b, h), np.inf)
    return tau, cost


def _double_cost(bc, lim, v_bound, u_bound, tc, ts):
    T, L, v0 = bc.horizon, bc.distance, bc.v0
    h = ts - tc
    v_c = v0 + u_bound * tc
    p_c = v0 * tc + 0.5 * u_bound * tc ** 2
    valid = h > 0
    h_safe = np.where(valid, h, 1.0)
    a, b = _fit_arc(h_safe, v_bound - v_c, (L - v_bound * (T - ts)) - p_c, v_c)
    ok = valid & _arc_admissible(a, b, h_safe, v_c, lim)
    ok &= (v_c <= lim.vmax + 1e-9) & (v_c >= lim.vmin - 1e-9)
    return np.where(ok, 0.5 * u_bound ** 2 * tc + _arc_energy(a, b, h_safe), np.inf)


def _scan_double(bc, lim, v_bound, u_bound, res):
    T = bc.horizon
    coarse = 10.0 * res
    grid = _ticks(0.0, T, coarse)
    tc, ts = np.meshgrid(grid, grid, indexing="ij")
    cost = _double_cost(bc, lim, v_bound, u_bound, tc, ts)
    if not np.any(np.isfinite(cost)):
        raise EmptyFeasibleSet("no admissible (control exit, speed entry) pair on the coarse grid")
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    span = 2.0 * coarse
    fine_c = _ticks(max(0.0, grid[i] - span), min(T, grid[i] + span), res)
    fine_s = _ticks(max(0.0, grid[j] - span), min(T, grid[j] + span), res)
    tc, ts = np.meshgrid(fine_c, fine_s, indexing="ij")
    cost = _double_cost(bc, lim, v_bound, u_bound, tc, ts)
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    return (float(tc[i, j]), float(ts[i, j])), float(cost[i, j])


def junction_grid_search(bc: BoundaryConditions, lim: Limits, case: ConstraintCase,
                         resolution: float = 1e-3) -> JunctionEstimate:
    """Cost-minimizing junction times (absolute) of ``case``'s arc template."""
    if case is ConstraintCase.UNCONSTRAINED:
        arc = solve_unconstrained(bc)
        return JunctionEstimate((), arc.energy())
    if case in (ConstraintCase.VMAX_ONLY, ConstraintCase.VMIN_ONLY):
        v_bound = lim.vmax if case is ConstraintCase.VMAX_ONLY else lim.vmin
        tau, cost = _scan_speed(bc, lim, v_bound, resolution)
    elif case in (ConstraintCase.UMAX_ONLY, ConstraintCase.UMIN_ONLY):
        u_bound = lim.umax if case is ConstraintCase.UMAX_ONLY else lim.umin
        tau, cost = _scan_control(bc, lim, u_bound, resolution)
    else:
        upper = case is ConstraintCase.UMAX_AND_VMAX
        v_bound, u_bound = (lim.vmax, lim.umax) if upper else (lim.vmin, lim.umin)
        (tc, ts), best = _scan_double(bc, lim, v_bound, u_bound, resolution)
        if not math.isfinite(best):
            raise EmptyFeasibleSet(f"no admissible junction pair for {case.value}")
        return JunctionEstimate((bc.t0 + tc, bc.t0 + ts), best)
    if not np.any(np.isfinite(cost)):
        raise EmptyFeasibleSet(f"no admissible junction for {case.value}")
    k = int(np.argmin(cost))
    return JunctionEstimate((bc.t0 + float(tau[k]),), float(cost[k]))
