"""Named instances reproducing the published simulation scenarios."""

from __future__ import annotations

from dataclasses import dataclass

from cavopt.core import BoundaryConditions, Limits


@dataclass(frozen=True)
class Fixture:
    name: str
    bc: BoundaryConditions
    lim: Limits
    intermediate: str  # "speed" or "control": which single-bound construction to show
    reported_junction: float | None = None
    note: str = ""


_BC = BoundaryConditions(t0=0.0, tm=10.0, p0=0.0, pm=200.0, v0=13.4)

FIXTURES = {
    "paper-1": Fixture(
        name="paper-1", bc=_BC, lim=Limits(vmax=22.0, umax=1.8), intermediate="speed",
        reported_junction=7.79,
        note="published speed-arc junction 7.79 s"),
    "paper-2": Fixture(
        name="paper-2", bc=_BC, lim=Limits(vmax=23.0, umax=1.35), intermediate="control"),
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(FIXTURES)}") from None
