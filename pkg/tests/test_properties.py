from __future__ import annotations

import pytest

from cavopt.constrained import solve
from cavopt.core import ConstraintCase, cost
from cavopt.classifier import margins
from cavopt.generate import mixed_instances
from cavopt.oracle import CASE_BOUNDS, active_bounds, solve_numeric

N_INSTANCES = 500
ORACLE_DT = 1e-2
AGREEMENT_FLOOR = 0.95
NEAR_THRESHOLD = 1e-2


@pytest.fixture(scope="module")
def solved():
    rows = []
    for inst in mixed_instances(N_INSTANCES, seed=7):
        traj, _ = solve(inst.bc, inst.lim)
        numeric = solve_numeric(inst.bc, inst.lim, int(round(inst.bc.horizon / ORACLE_DT)))
        rows.append((inst, traj, numeric))
    return rows


def test_every_case_is_covered(solved):
    assert {traj.case for _, traj, _ in solved} == set(ConstraintCase)


def test_cost_matches_oracle(solved):
    worst = 0.0
    for _, traj, numeric in solved:
        analytic = cost(traj)
        if analytic > 1e-9:
            worst = max(worst, abs(analytic - numeric.cost) / numeric.cost)
    assert worst <= 5e-3


def test_active_set_agrees_with_oracle(solved):
    disagreements = []
    for inst, traj, numeric in solved:
        if active_bounds(numeric, inst.lim) != CASE_BOUNDS[traj.case]:
            nearest = min(abs(m) for m in margins(inst.bc, inst.lim).values())
            disagreements.append((inst, nearest))
    assert 1 - len(disagreements) / len(solved) >= AGREEMENT_FLOOR
    for inst, nearest in disagreements:
        assert nearest <= NEAR_THRESHOLD, inst
