"""Closed-form minimum-energy trajectories under speed and acceleration bounds."""

from cavopt.classifier import classify
from cavopt.constrained import solve, validate_kkt
from cavopt.core import (ArcKind, BoundaryConditions, ConstraintCase, CostateProfile, Limits,
                         PiecewiseTrajectory, PolyArc, cost, eval_arc, reachable_envelope)
from cavopt.errors import (CavOptError, DomainError, EmptyFeasibleSet, InconsistentCase,
                           Infeasible, NonConverged, ScenarioError)
from cavopt.unconstrained import solve_unconstrained

__all__ = [
    "ArcKind", "BoundaryConditions", "CavOptError", "ConstraintCase", "CostateProfile",
    "DomainError", "EmptyFeasibleSet", "InconsistentCase", "Infeasible", "Limits",
    "NonConverged", "PiecewiseTrajectory", "PolyArc", "ScenarioError", "classify", "cost",
    "eval_arc", "reachable_envelope", "solve", "solve_unconstrained", "validate_kkt",
]
__version__ = "0.1.0"
