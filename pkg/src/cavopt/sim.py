"""FIFO coordination of vehicles through a signal-free intersection.

Each lane has its own position frame: entry at 0, merge point at the control
zone length L, exit at L + S. Inside the merging zone a vehicle holds its
merge-point speed.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from cavopt.constrained import solve
from cavopt.core import (BoundaryConditions, ConstraintCase, Limits, PiecewiseTrajectory, cost,
                         is_feasible, reachable_envelope)
from cavopt.errors import Infeasible, ScenarioError

#: Step by which a merge time is delayed while searching for a safe schedule (s).
PUSH_STEP = 0.05
MAX_PUSHES = 20_000


@dataclass(frozen=True)
class Arrival:
    id: str
    lane: str
    t0: float
    v0: float
    merge_time: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    control_zone_length: float
    merging_zone_size: float
    lanes: tuple[str, ...]
    conflicts: frozenset[frozenset[str]]
    limits: Limits
    arrivals: tuple[Arrival, ...]
    standstill_gap: float = 5.0
    time_headway: float = 0.5
    conflict_separation: float = 0.1

    def __post_init__(self):
        if not self.control_zone_length > 0:
            raise ScenarioError("control_zone_length_m must be positive")
        if not self.merging_zone_size > 0:
            raise ScenarioError("merging_zone_size_m must be positive")
        names = set(self.lanes)
        for pair in self.conflicts:
            if not pair <= names or len(pair) != 2:
                raise ScenarioError(f"conflict {sorted(pair)} refers to unknown lanes")
        seen = set()
        for k, arr in enumerate(self.arrivals):
            where = f"vehicles[{k}]"
            if arr.id in seen:
                raise ScenarioError(f"{where}.id: duplicate vehicle id {arr.id!r}")
            seen.add(arr.id)
            if arr.lane not in names:
                raise ScenarioError(f"{where}.lane: unknown lane {arr.lane!r}")
            if not self.limits.admits(arr.v0) or arr.v0 <= 0:
                raise ScenarioError(f"{where}.entry_speed_mps: {arr.v0} outside "
                                    f"[{self.limits.vmin}, {self.limits.vmax}]")
            if arr.t0 < 0:
                raise ScenarioError(f"{where}.entry_time_s: must be >= 0")
            if k and arr.t0 < self.arrivals[k - 1].t0:
                raise ScenarioError(f"{where}.entry_time_s: arrivals must be sorted by entry time")
            if arr.merge_time is not None and arr.merge_time <= arr.t0:
                raise ScenarioError(f"{where}.merge_time_s: must exceed entry_time_s")

    def conflicting(self, lane_a: str, lane_b: str) -> bool:
        return frozenset((lane_a, lane_b)) in self.conflicts


@dataclass(frozen=True)
class VehiclePlan:
    id: str
    lane: str
    bc: BoundaryConditions
    traj: PiecewiseTrajectory
    t_f: float
    cost: float

    @property
    def case(self) -> ConstraintCase:
        return self.traj.case

    @property
    def exit_speed(self) -> float:
        return float(self.traj.eval(self.bc.tm)[1])

    @property
    def gamma(self) -> tuple[float, float]:
        """Merging-zone occupancy, half-open [tm, t_f)."""
        return self.bc.tm, self.t_f

    def state(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lane-frame position and speed on [t0, t_f], constant speed after tm."""
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, self.bc.tm)
        p, v, _ = self.traj.eval(inside)
        p = np.asarray(p, dtype=float) + self.exit_speed * (t - inside)
        return p, np.where(t > self.bc.tm, self.exit_speed, v)


@dataclass(frozen=True)
class RearEndViolation:
    leader: str
    follower: str
    t: float
    gap: float
    required: float


@dataclass(frozen=True)
class LateralViolation:
    first: str
    second: str
    overlap_start: float
    overlap_end: float


@dataclass
class SimulationReport:
    plans: list[VehiclePlan] = field(default_factory=list)
    rear_end: list[RearEndViolation] = field(default_factory=list)
    lateral: list[LateralViolation] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(sum(plan.cost for plan in self.plans))

    @property
    def case_counts(self) -> dict[str, int]:
        counts = Counter(plan.case.value for plan in self.plans)
        return {case.value: counts.get(case.value, 0) for case in ConstraintCase}

    @property
    def safe(self) -> bool:
        return not self.rear_end and not self.lateral


def _plan(arr: Arrival, tm: float, cfg: ScenarioConfig) -> VehiclePlan:
    bc = BoundaryConditions(t0=arr.t0, tm=tm, p0=0.0, pm=cfg.control_zone_length, v0=arr.v0)
    traj, _ = solve(bc, cfg.limits)
    v_exit = float(traj.eval(tm)[1])
    if v_exit <= 0.0:
        raise Infeasible(f"vehicle {arr.id} reaches the merge point at rest", vehicle=arr.id)
    return VehiclePlan(arr.id, arr.lane, bc, traj, tm + cfg.merging_zone_size / v_exit, cost(traj))


def _rear_end_pair(leader: VehiclePlan, follower: VehiclePlan, cfg: ScenarioConfig,
                   dt_sample: float) -> RearEndViolation | None:
    lo = max(leader.bc.t0, follower.bc.t0)
    hi = min(leader.t_f, follower.t_f)
    if hi < lo:
        return None
    n = max(2, int(math.ceil((hi - lo) / dt_sample)) + 1)
    t = np.linspace(lo, hi, n)
    p_lead, _ = leader.state(t)
    p_follow, v_follow = follower.state(t)
    gap = p_lead - p_follow
    required = cfg.standstill_gap + cfg.time_headway * v_follow
    bad = np.nonzero(gap < required - 1e-9)[0]
    if bad.size == 0:
        return None
    k = int(bad[0])
    return RearEndViolation(leader.id, follower.id, float(t[k]), float(gap[k]), float(required[k]))


def check_rear_end(plans: list[VehiclePlan], cfg: ScenarioConfig, dt_sample: float = 0.01
                   ) -> list[RearEndViolation]:
    """First violation of every consecutive same-lane pair (by entry order)."""
    out = []
    last: dict[str, VehiclePlan] = {}
    for plan in sorted(plans, key=lambda p: p.bc.t0):
        leader = last.get(plan.lane)
        if leader is not None:
            hit = _rear_end_pair(leader, plan, cfg, dt_sample)
            if hit is not None:
                out.append(hit)
        last[plan.lane] = plan
    return out


def check_lateral(plans: list[VehiclePlan], cfg: ScenarioConfig) -> list[LateralViolation]:
    out = []
    for i, a in enumerate(plans):
        for b in plans[i + 1:]:
            if not cfg.conflicting(a.lane, b.lane):
                continue
            start = max(a.gamma[0], b.gamma[0])
            end = min(a.gamma[1], b.gamma[1])
            if start < end:  # half-open intervals: touching is allowed
                out.append(LateralViolation(a.id, b.id, start, end))
    return out


def _earliest(arr: Arrival, cfg: ScenarioConfig, done: list[VehiclePlan]) -> float:
    base = arr.merge_time if arr.merge_time is not None else arr.t0 + cfg.control_zone_length / arr.v0
    for prev in done:
        if prev.lane == arr.lane:
            base = max(base, prev.bc.tm + cfg.time_headway + cfg.standstill_gap / prev.exit_speed)
        elif cfg.conflicting(prev.lane, arr.lane):
            base = max(base, prev.t_f + cfg.conflict_separation)
    return base


def _schedule(cfg: ScenarioConfig, dt_sample: float) -> list[VehiclePlan]:
    done: list[VehiclePlan] = []
    L = cfg.control_zone_length
    for arr in cfg.arrivals:
        tm = _earliest(arr, cfg, done)
        leader = next((p for p in reversed(done) if p.lane == arr.lane), None)
        for _ in range(MAX_PUSHES):
            bc = BoundaryConditions(t0=arr.t0, tm=tm, p0=0.0, pm=L, v0=arr.v0)
            if not is_feasible(bc, cfg.limits):
                lo, _ = reachable_envelope(bc, cfg.limits)
                if lo > L:
                    raise Infeasible(f"vehicle {arr.id} cannot be delayed to {tm:.3f} s "
                                     f"without exceeding the control zone", vehicle=arr.id)
                tm += PUSH_STEP
                continue
            plan = _plan(arr, tm, cfg)
            if leader is None or _rear_end_pair(leader, plan, cfg, dt_sample) is None:
                break
            hit = _rear_end_pair(leader, plan, cfg, dt_sample)
            if hit is not None and hit.t <= arr.t0 + 1e-9:
                raise Infeasible(f"vehicle {arr.id} enters too close to {leader.id}",
                                 vehicle=arr.id)
            tm += PUSH_STEP
        else:
            raise Infeasible(f"no safe merge time found for vehicle {arr.id}", vehicle=arr.id)
        done.append(plan)
    return done


def assign_merging_times(cfg: ScenarioConfig, dt_sample: float = 0.01) -> dict[str, float]:
    return {plan.id: plan.bc.tm for plan in _schedule(cfg, dt_sample)}


def run(cfg: ScenarioConfig, dt_sample: float = 0.01) -> SimulationReport:
    plans = _schedule(cfg, dt_sample)
    return SimulationReport(plans=plans, rear_end=check_rear_end(plans, cfg, dt_sample),
                            lateral=check_lateral(plans, cfg))


FOUR_WAY_LANES = ("north", "south", "east", "west")
FOUR_WAY_CONFLICTS = frozenset(frozenset(pair) for pair in (
    ("north", "east"), ("north", "west"), ("south", "east"), ("south", "west")))


def random_scenario(n_vehicles: int, seed: int = 0, min_lane_spacing: float = 4.0,
                    limits: Limits | None = None) -> ScenarioConfig:
    """Four-way intersection with Poisson-like arrivals and safe entry spacing."""
    rng = np.random.default_rng(seed)
    lim = limits or Limits(vmin=2.0, vmax=22.0, umin=-3.0, umax=2.0)
    last_entry = {lane: -math.inf for lane in FOUR_WAY_LANES}
    arrivals = []
    t = 0.0
    for k in range(n_vehicles):
        lane = FOUR_WAY_LANES[int(rng.integers(len(FOUR_WAY_LANES)))]
        t = max(t + float(rng.exponential(2.5)), last_entry[lane] + min_lane_spacing)
        t = round(t, 3)
        last_entry[lane] = t
        v0 = round(float(rng.uniform(12.0, 16.0)), 2)
        arrivals.append(Arrival(id=f"v{k + 1:02d}", lane=lane, t0=t, v0=v0))
    arrivals.sort(key=lambda a: a.t0)
    return ScenarioConfig(control_zone_length=300.0, merging_zone_size=30.0,
                          lanes=FOUR_WAY_LANES, conflicts=FOUR_WAY_CONFLICTS, limits=lim,
                          arrivals=tuple(arrivals))
