"""Acceptance criteria, one PASS/FAIL line each (see the terminal summary)."""

from __future__ import annotations

import filecmp
import time

import numpy as np
import pytest

from cavopt.classifier import umax_active, umin_active, vmax_active, vmin_active
from cavopt.constrained import perturbed, solve, validate_kkt
from cavopt.core import ConstraintCase, Limits, cost
from cavopt.export import write_report
from cavopt.fixtures import get_fixture
from cavopt.generate import Instance, instances_by_case, mixed_instances
from cavopt.oracle import junction_grid_search, solve_numeric
from cavopt.report import build_figure_data
from cavopt.scenario import load_scenario
from cavopt.sim import random_scenario, run
from cavopt.unconstrained import solve_unconstrained
from support import instance, worst_violation

# Pinned tolerances.
COEFF_ATOL = 1e-12
C1_ORACLE_GAP = 1e-3
C1_ANALYTIC_S = 1e-3
C1_ORACLE_S = 1.0
C1_ORACLE_STEPS = 1000
N_PROPERTY = 500
N_PER_CASE_JUNCTION = 100
JUNCTION_ATOL = 1e-2
JUNCTION_RES = 1e-3
FIXTURE1_ENTRY, FIXTURE1_ENTRY_TOL, FIXTURE1_REPORTED = 6.98, 0.01, 7.79
FIXTURE1_REACH, FIXTURE1_REACH_TOL = 199.46, 0.01
FIXTURE2_EXIT, FIXTURE2_EXIT_TOL = 7.418, 0.005
FIXTURE2_SPEED, FIXTURE2_SPEED_TOL = 23.41, 0.01
SENTINEL_DELTA = 1e-3
N_PER_CASE_ORACLE = 40
C6_GAP = 5e-3
C6_ORACLE_DT = 1e-2
C6_SAMPLE_DT = 1e-3
C6_VIOLATION = 1e-6
C6_BUDGET_S = 300.0
SIM_SEEDS = (0, 1, 2, 3, 4)
SIM_VEHICLES = 20

_START = time.perf_counter()


def _junction_instances():
    return instances_by_case(N_PER_CASE_JUNCTION, seed=2024)


def test_c1_unconstrained_closed_form(acceptance_log):
    bc = get_fixture("paper-1").bc
    arc = solve_unconstrained(bc)
    coeffs = (arc.a, arc.b, arc.c, arc.d)
    coeff_ok = np.allclose(coeffs, (-0.198, 1.98, 13.4, 0.0), rtol=0, atol=COEFF_ATOL)
    terminal_ok = arc.control(bc.tm) == 0.0

    reps = 2000
    t = time.perf_counter()
    for _ in range(reps):
        solve_unconstrained(bc)
    analytic_s = (time.perf_counter() - t) / reps
    t = time.perf_counter()
    numeric = solve_numeric(bc, Limits(), n_steps=C1_ORACLE_STEPS)
    oracle_s = time.perf_counter() - t
    gap = abs(numeric.cost - arc.energy()) / arc.energy()

    ok = (coeff_ok and terminal_ok and gap <= C1_ORACLE_GAP and analytic_s < C1_ANALYTIC_S
          and oracle_s < C1_ORACLE_S)
    acceptance_log("C1", ok, f"coeffs={tuple(round(c, 12) for c in coeffs)} u(T)={arc.control(bc.tm)} "
                   f"gap={gap:.2e}<={C1_ORACLE_GAP} analytic={analytic_s * 1e6:.1f}us "
                   f"oracle={oracle_s * 1e3:.0f}ms")
    assert ok


def _max_min_speed(arc, bc):
    s = np.linspace(bc.t0, bc.tm, 20001)
    v = arc.speed(s)
    return float(v.max()), float(v.min())


def test_c2_activation_equivalences(acceptance_log):
    counter = []
    for inst in mixed_instances(N_PROPERTY, seed=11):
        bc, lim = inst.bc, inst.lim
        arc = solve_unconstrained(bc)
        vhi, vlo = _max_min_speed(arc, bc)
        pairs = {
            "umax": (umax_active(bc, lim), arc.b >= lim.umax),
            "vmax": (vmax_active(bc, lim), vhi >= lim.vmax),
            "umin": (umin_active(bc, lim), arc.b <= lim.umin),
            "vmin": (vmin_active(bc, lim), vlo <= lim.vmin),
        }
        counter += [(name, inst) for name, (got, want) in pairs.items() if got != want]
    ok = not counter
    acceptance_log("C2", ok, f"instances={N_PROPERTY} counterexamples={len(counter)}")
    assert ok


def test_c3_junctions_match_grid_search(acceptance_log):
    worst = {}
    for case, group in _junction_instances().items():
        if case is ConstraintCase.UNCONSTRAINED:
            continue
        dev = 0.0
        for inst in group:
            traj, _ = solve(inst.bc, inst.lim)
            est = junction_grid_search(inst.bc, inst.lim, case, resolution=JUNCTION_RES)
            dev = max(dev, float(np.max(np.abs(np.subtract(traj.junctions, est.junctions)))))
        worst[case.value] = dev
    ok = all(d <= JUNCTION_ATOL for d in worst.values())
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    acceptance_log("C3", ok, f"per_case={N_PER_CASE_JUNCTION} max|dtau|: {detail} (tol {JUNCTION_ATOL})")
    assert ok


def test_c4_published_scenarios(acceptance_log):
    fx1, fx2 = get_fixture("paper-1"), get_fixture("paper-2")
    d1 = build_figure_data(fx1.bc, fx1.lim, fx1.intermediate, fx1.reported_junction).facts
    d2 = build_figure_data(fx2.bc, fx2.lim, fx2.intermediate, fx2.reported_junction).facts
    checks = {
        "entry": abs(d1["speed_arc_entry_s"] - FIXTURE1_ENTRY) <= FIXTURE1_ENTRY_TOL,
        "reported": d1["reported_speed_arc_entry_s"] == FIXTURE1_REPORTED,
        "reach": abs(d1["max_reachable_m"] - FIXTURE1_REACH) <= FIXTURE1_REACH_TOL,
        "infeasible": d1["max_reachable_m"] < fx1.bc.distance and not d1["feasible"],
        "exit": abs(d2["control_arc_exit_s"] - FIXTURE2_EXIT) <= FIXTURE2_EXIT_TOL,
        "speed": abs(d2["speed_at_control_exit_mps"] - FIXTURE2_SPEED) <= FIXTURE2_SPEED_TOL,
        "above_vmax": d2["speed_at_control_exit_mps"] > fx2.lim.vmax,
        "speed_binds": d2["speed_binds_after_control_arc"] is True,
    }
    ok = all(checks.values())
    acceptance_log("C4", ok, (
        f"paper-1 entry={d1['speed_arc_entry_s']:.4f} (stated {FIXTURE1_REPORTED}) "
        f"max_reach={d1['max_reachable_m']:.3f}<{fx1.bc.distance:g}; "
        f"paper-2 exit={d2['control_arc_exit_s']:.4f} v(exit)={d2['speed_at_control_exit_mps']:.4f}"
        f">{fx2.lim.vmax:g} (construction peak {d2['control_only_extreme_speed_mps']:.4f}) "
        f"speed_binds={d2['speed_binds_after_control_arc']}"
        + ("" if ok else f" failed={[k for k, v in checks.items() if not v]}")))
    assert ok


def test_c5_kkt(acceptance_log):
    pool = [i for group in _junction_instances().values() for i in group]
    pool += mixed_instances(N_PROPERTY, seed=11)
    bc, lim = instance(195, 10, 13.4, vmax=22, umax=1.8)
    pool.append(Instance(bc, lim, ConstraintCase.UMAX_AND_VMAX))
    failed, sentinel_missed = 0, 0
    for inst in pool:
        traj, profile = solve(inst.bc, inst.lim)
        if not validate_kkt(traj, profile, inst.bc, inst.lim).passed:
            failed += 1
        bad = perturbed(traj, SENTINEL_DELTA)
        if validate_kkt(bad, profile, inst.bc, inst.lim).passed:
            sentinel_missed += 1
    ok = failed == 0 and sentinel_missed == 0
    acceptance_log("C5", ok, f"instances={len(pool)} kkt_failures={failed} "
                   f"sentinel(+{SENTINEL_DELTA:g}) undetected={sentinel_missed}")
    assert ok


def test_c6_oracle_equivalence_all_cases(acceptance_log):
    t = time.perf_counter()
    groups = instances_by_case(N_PER_CASE_ORACLE, seed=99)
    worst_gap, worst_viol, seen = 0.0, 0.0, set()
    for case, group in groups.items():
        for inst in group:
            traj, _ = solve(inst.bc, inst.lim)
            seen.add(traj.case)
            numeric = solve_numeric(inst.bc, inst.lim,
                                    int(round(inst.bc.horizon / C6_ORACLE_DT)))
            analytic = cost(traj)
            gap = abs(analytic - numeric.cost) / numeric.cost if analytic > 1e-9 else \
                abs(analytic - numeric.cost)
            worst_gap = max(worst_gap, gap)
            worst_viol = max(worst_viol, worst_violation(traj, inst.lim, C6_SAMPLE_DT))
    elapsed = time.perf_counter() - t
    suite = time.perf_counter() - _START
    ok = (seen == set(ConstraintCase) and worst_gap <= C6_GAP and worst_viol <= C6_VIOLATION
          and suite < C6_BUDGET_S)
    acceptance_log("C6", ok, f"cases={len(seen)}/7 per_case={N_PER_CASE_ORACLE} "
                   f"max_gap={worst_gap:.2e}<={C6_GAP} max_violation={worst_viol:.1e}"
                   f"<={C6_VIOLATION} runtime={elapsed:.1f}s suite={suite:.1f}s<{C6_BUDGET_S:g}s")
    assert ok


def _run_and_write(cfg, out):
    report = run(cfg)
    write_report(report, out)
    return report


@pytest.mark.parametrize("source", ["builtin"] + [f"random-{s}" for s in SIM_SEEDS])
def test_c7_simulation_safety(acceptance_log, tmp_path, source):
    if source == "builtin":
        cfg = load_scenario("builtin:four-way")
    else:
        cfg = random_scenario(SIM_VEHICLES, seed=int(source.split("-")[1]))
    first = _run_and_write(cfg, tmp_path / "a")
    _run_and_write(cfg, tmp_path / "b")
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    sub = filecmp.dircmp(tmp_path / "a" / "vehicles", tmp_path / "b" / "vehicles")
    names = [p.name for p in (tmp_path / "a").iterdir() if p.is_file()]
    vnames = [p.name for p in (tmp_path / "a" / "vehicles").iterdir()]
    _, mism, err = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    _, vmism, verr = filecmp.cmpfiles(tmp_path / "a" / "vehicles", tmp_path / "b" / "vehicles",
                                      vnames, shallow=False)
    identical = not (mism or err or vmism or verr or cmp.left_only or cmp.right_only
                     or sub.left_only or sub.right_only)
    ok = first.safe and identical and len(first.plans) == len(cfg.arrivals)
    acceptance_log("C7", ok, f"{source}: vehicles={len(first.plans)} rear_end={len(first.rear_end)} "
                   f"lateral={len(first.lateral)} byte_identical={identical}")
    assert ok
