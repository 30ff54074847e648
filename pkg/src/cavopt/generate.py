"""Random feasible instances with guaranteed coverage of every constraint case."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cavopt.classifier import classify
from cavopt.core import BoundaryConditions, ConstraintCase, Limits, reachable_envelope

#: Instances keep the distance this fraction away from either envelope edge.
ENVELOPE_MARGIN = 0.02


@dataclass(frozen=True)
class Instance:
    bc: BoundaryConditions
    lim: Limits
    case: ConstraintCase


def random_instance(rng: np.random.Generator, side: str | None = None) -> Instance:
    """One feasible instance; ``side`` is "max", "min" or None for either."""
    if side is None:
        side = "max" if rng.random() < 0.5 else "min"
    T = rng.uniform(5.0, 15.0)
    v0 = rng.uniform(6.0, 22.0)
    lim = Limits(vmin=rng.uniform(0.0, max(0.0, v0 - 1.0)),
                 vmax=v0 + rng.uniform(1.0, 12.0),
                 umin=-rng.uniform(0.5, 4.0),
                 umax=rng.uniform(0.5, 3.0))
    probe = BoundaryConditions.from_horizon(v0 * T, T, v0)
    lo, hi = reachable_envelope(probe, lim)
    f = rng.uniform(ENVELOPE_MARGIN, 1.0 - ENVELOPE_MARGIN)
    cruise = v0 * T
    L = cruise + f * (hi - cruise) if side == "max" else cruise - f * (cruise - lo)
    bc = BoundaryConditions.from_horizon(L, T, v0)
    return Instance(bc, lim, classify(bc, lim))


def _flat_instance(rng: np.random.Generator) -> Instance:
    inst = random_instance(rng)
    bc = BoundaryConditions.from_horizon(inst.bc.v0 * inst.bc.horizon, inst.bc.horizon,
                                         inst.bc.v0)
    return Instance(bc, inst.lim, classify(bc, inst.lim))


def instances_by_case(per_case: int, seed: int = 0, max_tries: int = 200_000
                      ) -> dict[ConstraintCase, list[Instance]]:
    """``per_case`` instances of every constraint case, by rejection sampling."""
    rng = np.random.default_rng(seed)
    out: dict[ConstraintCase, list[Instance]] = {case: [] for case in ConstraintCase}
    tries = 0
    while any(len(v) < per_case for v in out.values()):
        tries += 1
        if tries > max_tries:
            short = [c.value for c, v in out.items() if len(v) < per_case]
            raise RuntimeError(f"could not fill quotas for {short}")
        inst = random_instance(rng)
        if len(out[inst.case]) < per_case:
            out[inst.case].append(inst)
    return out


def mixed_instances(n: int, seed: int = 0) -> list[Instance]:
    """``n`` instances covering all cases as evenly as possible, in a fixed shuffled order."""
    per_case = -(-n // len(ConstraintCase))
    pool = [inst for group in instances_by_case(per_case, seed).values() for inst in group]
    rng = np.random.default_rng(seed + 1)
    order = rng.permutation(len(pool))[:n]
    return [pool[i] for i in order]
