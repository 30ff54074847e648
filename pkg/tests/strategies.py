"""Hypothesis strategies for feasible instances."""

from __future__ import annotations

from hypothesis import strategies as st

from cavopt.core import BoundaryConditions, Limits, reachable_envelope


@st.composite
def feasible_instances(draw, side: str | None = None, margin: float = 0.02):
    T = draw(st.floats(4.0, 20.0))
    v0 = draw(st.floats(4.0, 25.0))
    lim = Limits(vmin=draw(st.floats(0.0, 1.0)) * max(0.0, v0 - 0.5),
                 vmax=v0 + draw(st.floats(0.5, 15.0)),
                 umin=-draw(st.floats(0.3, 5.0)),
                 umax=draw(st.floats(0.3, 5.0)))
    cruise = BoundaryConditions.from_horizon(v0 * T, T, v0)
    lo, hi = reachable_envelope(cruise, lim)
    f = draw(st.floats(margin, 1.0 - margin))
    side = side or draw(st.sampled_from(["max", "min"]))
    L = v0 * T + f * (hi - v0 * T) if side == "max" else v0 * T - f * (v0 * T - lo)
    return BoundaryConditions.from_horizon(L, T, v0), lim
