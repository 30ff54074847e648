from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, trapezoid

from cavopt.core import (ArcKind, BoundaryConditions, ConstraintCase, Limits, PiecewiseTrajectory,
                         PolyArc, cost, eval_arc, is_feasible, reachable_envelope)
from cavopt.errors import DomainError, InconsistentCase


class TestTypes:
    def test_boundary_conditions_invariants(self):
        with pytest.raises(ValueError):
            BoundaryConditions(t0=0.0, tm=0.0, p0=0.0, pm=1.0, v0=1.0)
        with pytest.raises(ValueError):
            BoundaryConditions(t0=-1.0, tm=1.0, p0=0.0, pm=1.0, v0=1.0)
        with pytest.raises(ValueError):
            BoundaryConditions(t0=0.0, tm=1.0, p0=5.0, pm=5.0, v0=1.0)
        with pytest.raises(ValueError):
            BoundaryConditions(t0=0.0, tm=1.0, p0=0.0, pm=1.0, v0=0.0)

    def test_horizon_and_distance(self):
        bc = BoundaryConditions(t0=2.0, tm=12.0, p0=10.0, pm=210.0, v0=13.4)
        assert bc.horizon == 10.0
        assert bc.distance == 200.0

    def test_limits_invariants(self):
        Limits()  # every bound optional
        with pytest.raises(ValueError):
            Limits(vmin=5.0, vmax=5.0)
        with pytest.raises(ValueError):
            Limits(vmin=-1.0)
        with pytest.raises(ValueError):
            Limits(umin=0.0)
        with pytest.raises(ValueError):
            Limits(umax=0.0)

    def test_arc_window_must_be_positive(self):
        with pytest.raises(ValueError):
            PolyArc(0, 0, 1, 0, t_start=1.0, t_end=1.0)


class TestEval:
    def test_cruise(self):
        arc = PolyArc(a=0, b=0, c=13.4, d=0, t_start=0, t_end=10)
        assert eval_arc(arc, 10.0) == pytest.approx((134.0, 13.4, 0.0))

    def test_cubic_arc_at_horizon(self):
        # Hand arithmetic: -0.198*1000/6 + 1.98*50 + 134 = 200; -9.9 + 19.8 + 13.4 = 23.3.
        arc = PolyArc(a=-0.198, b=1.98, c=13.4, d=0, t_start=0, t_end=10)
        p, v, u = eval_arc(arc, 10.0)
        assert p == pytest.approx(200.0, abs=1e-12)
        assert v == pytest.approx(23.3, abs=1e-12)
        assert u == pytest.approx(0.0, abs=1e-12)

    def test_cubic_arc_matches_integrated_control(self):
        arc = PolyArc(a=-0.198, b=1.98, c=13.4, d=0, t_start=0, t_end=10)
        v_num = 13.4 + quad(lambda s: -0.198 * s + 1.98, 0, 10)[0]
        p_num = quad(lambda s: 13.4 + quad(lambda r: -0.198 * r + 1.98, 0, s)[0], 0, 10)[0]
        p, v, _ = eval_arc(arc, 10.0)
        assert v == pytest.approx(v_num, rel=1e-12)
        assert p == pytest.approx(p_num, rel=1e-10)

    def test_speed_arc_shape(self):
        arc = PolyArc(a=0, b=0, c=22.0, d=-25.0, t_start=8.0, t_end=10.0, kind=ArcKind.SPEED_MAX)
        p, v, u = eval_arc(arc, 8.0)
        assert (p, v, u) == pytest.approx((151.0, 22.0, 0.0))

    def test_origin_shift(self):
        shifted = PolyArc(a=1.0, b=2.0, c=3.0, d=4.0, t_start=5.0, t_end=7.0, origin=5.0)
        plain = PolyArc(a=1.0, b=2.0, c=3.0, d=4.0, t_start=0.0, t_end=2.0)
        assert eval_arc(shifted, 6.5) == pytest.approx(eval_arc(plain, 1.5))

    @pytest.mark.parametrize("t", [-0.1, 10.1])
    def test_outside_window_raises(self, t):
        arc = PolyArc(a=0, b=0, c=1, d=0, t_start=0, t_end=10)
        with pytest.raises(DomainError):
            eval_arc(arc, t)

    def test_vectorised(self):
        arc = PolyArc(a=0.3, b=-1.0, c=5.0, d=1.0, t_start=0, t_end=4)
        t = np.linspace(0, 4, 9)
        p, v, u = eval_arc(arc, t)
        assert p.shape == v.shape == u.shape == (9,)
        assert u == pytest.approx(0.3 * t - 1.0)

    @given(a=st.floats(-2, 2), b=st.floats(-3, 3), c=st.floats(0, 30), d=st.floats(-100, 100),
           t=st.floats(0.5, 9.5))
    def test_speed_is_derivative_of_position(self, a, b, c, d, t):
        arc = PolyArc(a=a, b=b, c=c, d=d, t_start=0, t_end=10)
        h = 1e-5
        fd = (arc.position(t + h) - arc.position(t - h)) / (2 * h)
        scale = max(1.0, abs(float(arc.speed(t))))
        assert abs(fd - arc.speed(t)) <= 1e-6 * scale


class TestTrajectory:
    def test_contiguity_enforced(self):
        a1 = PolyArc(0, 0, 1, 0, 0, 1)
        a2 = PolyArc(0, 0, 1, 1, 1.5, 2)
        with pytest.raises(ValueError):
            PiecewiseTrajectory((a1, a2), ConstraintCase.UNCONSTRAINED)

    def test_junctions_and_lookup(self):
        a1 = PolyArc(0, 1.0, 0, 0, 0, 1)
        a2 = PolyArc(0, 0, 1.0, -0.5, 1, 3, kind=ArcKind.SPEED_MAX)
        traj = PiecewiseTrajectory((a1, a2), ConstraintCase.VMAX_ONLY)
        assert traj.junctions == (1.0,)
        assert list(traj.arc_index([0.0, 0.5, 1.0, 3.0])) == [0, 0, 1, 1]
        traj.check_continuity()

    def test_discontinuity_detected(self):
        a1 = PolyArc(0, 1.0, 0, 0, 0, 1)
        a2 = PolyArc(0, 0, 2.0, 0.0, 1, 3)
        traj = PiecewiseTrajectory((a1, a2), ConstraintCase.VMAX_ONLY)
        with pytest.raises(InconsistentCase):
            traj.check_continuity()

    def test_sample_times_include_junctions(self):
        a1 = PolyArc(0, 1.0, 0, 0, 0, 1.2345)
        a2 = PolyArc(0, 0, 1.2345, -0.76197, 1.2345, 3)
        traj = PiecewiseTrajectory((a1, a2), ConstraintCase.VMAX_ONLY)
        t = traj.sample_times(0.1)
        assert 1.2345 in t and t[0] == 0 and t[-1] == 3
        assert np.all(np.diff(t) > 0)


class TestCost:
    def test_zero_control(self):
        traj = PiecewiseTrajectory((PolyArc(0, 0, 5, 0, 0, 10),), ConstraintCase.UNCONSTRAINED)
        assert cost(traj) == 0.0

    def test_constant_control(self):
        traj = PiecewiseTrajectory((PolyArc(0, 1.5, 5, 0, 0, 4),), ConstraintCase.UMAX_ONLY)
        assert cost(traj) == pytest.approx(0.5 * 1.5 ** 2 * 4)

    def test_unconstrained_cost_matches_trapezoid(self):
        arc = PolyArc(a=-0.198, b=1.98, c=13.4, d=0, t_start=0, t_end=10)
        traj = PiecewiseTrajectory((arc,), ConstraintCase.UNCONSTRAINED)
        t = np.linspace(0, 10, 200_001)
        numeric = trapezoid(0.5 * arc.control(t) ** 2, t)
        assert cost(traj) == pytest.approx(numeric, rel=1e-6)
        assert cost(traj) == pytest.approx(6.534, rel=1e-12)

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), t0=st.floats(0, 50), span=st.floats(0.1, 20))
    def test_cost_matches_quadrature(self, a, b, t0, span):
        arc = PolyArc(a=a, b=b, c=10.0, d=0.0, t_start=t0, t_end=t0 + span, origin=t0)
        traj = PiecewiseTrajectory((arc,), ConstraintCase.UNCONSTRAINED)
        numeric = quad(lambda t: 0.5 * float(arc.control(t)) ** 2, t0, t0 + span,
                       epsabs=0, epsrel=1e-12)[0]
        assert cost(traj) == pytest.approx(numeric, rel=1e-8, abs=1e-14)


class TestEnvelope:
    def test_accelerate_then_cruise(self):
        # 8.6/1.8 s at a mean 17.7 m/s, then 22 m/s for the rest of the 10 s.
        bc = BoundaryConditions.from_horizon(195, 10, 13.4)
        expected = 17.7 * 8.6 / 1.8 + 22 * (10 - 8.6 / 1.8)
        _, hi = reachable_envelope(bc, Limits(vmax=22, umax=1.8))
        assert hi == pytest.approx(expected, rel=1e-14)
        assert hi == pytest.approx(199.4556, abs=1e-4)

    def test_no_headroom(self):
        bc = BoundaryConditions.from_horizon(100, 10, 22.0)
        assert reachable_envelope(bc, Limits(vmax=22, umax=1.8))[1] == pytest.approx(220.0)

    def test_at_min_speed(self):
        bc = BoundaryConditions.from_horizon(100, 10, 5.0)
        assert reachable_envelope(bc, Limits(vmin=5.0, umin=-2.0))[0] == pytest.approx(50.0)

    def test_never_reaching_bound(self):
        bc = BoundaryConditions.from_horizon(100, 4, 10.0)
        _, hi = reachable_envelope(bc, Limits(vmax=30, umax=1.0))
        assert hi == pytest.approx(10 * 4 + 0.5 * 16)

    def test_infinite_bounds(self):
        bc = BoundaryConditions.from_horizon(100, 4, 10.0)
        lo, hi = reachable_envelope(bc, Limits())
        assert hi == math.inf and lo == 0.0
        lo, hi = reachable_envelope(bc, Limits(vmin=3.0, vmax=12.0))
        assert (lo, hi) == (12.0, 48.0)

    def test_feasibility_gate(self):
        lim = Limits(vmax=22, umax=1.8)
        assert not is_feasible(BoundaryConditions.from_horizon(200, 10, 13.4), lim)
        assert is_feasible(BoundaryConditions.from_horizon(195, 10, 13.4), lim)
        assert not is_feasible(BoundaryConditions.from_horizon(195, 10, 23.0), lim)

    @given(v0=st.floats(2, 20), T=st.floats(1, 20), du=st.floats(0, 3), dv=st.floats(0, 10),
           umax=st.floats(0.3, 3), umin=st.floats(-3, -0.3))
    def test_monotone_in_bounds(self, v0, T, du, dv, umax, umin):
        bc = BoundaryConditions.from_horizon(v0 * T, T, v0)
        tight = Limits(vmin=v0 / 2, vmax=v0 + 1, umin=umin, umax=umax)
        loose = Limits(vmin=max(0.0, v0 / 2 - dv), vmax=v0 + 1 + dv, umin=umin - du, umax=umax + du)
        lo_t, hi_t = reachable_envelope(bc, tight)
        lo_l, hi_l = reachable_envelope(bc, loose)
        assert hi_l >= hi_t - 1e-9 * hi_t
        assert lo_l <= lo_t + 1e-9 * max(1.0, lo_t)
