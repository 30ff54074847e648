"""Exception hierarchy shared by the solvers, the oracle and the simulator."""


class CavOptError(Exception):
    """Base class for all package errors."""


class DomainError(CavOptError, ValueError):
    """An arc or trajectory was evaluated outside its time window."""


class Infeasible(CavOptError):
    """No admissible trajectory covers the requested distance in the horizon.

    ``vehicle`` is set when the failure comes from the coordination simulator.
    """

    def __init__(self, message: str, vehicle: str | None = None):
        super().__init__(message)
        self.vehicle = vehicle


class InconsistentCase(CavOptError):
    """The selected constraint case could not be constructed consistently.

    On feasible inputs this signals a bug: the classifier and the
    construction disagree.
    """


class NonConverged(CavOptError):
    """The numerical oracle hit its iteration cap."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class EmptyFeasibleSet(CavOptError):
    """A junction grid search found no admissible candidate."""


class ScenarioError(CavOptError, ValueError):
    """A scenario file could not be parsed or failed validation."""
