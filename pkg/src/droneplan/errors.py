"""Exception types shared across the package."""


class DronePlanError(Exception):
    """Base class for all package errors."""


class ParseError(DronePlanError):
    """Scenario file could not be read or decoded."""


class ValidationError(DronePlanError):
    """A scenario or parameter invariant is violated."""


class DomainError(DronePlanError):
    """An argument is outside the mathematical domain of an operation."""


class UnknownCell(DronePlanError):
    """A cell identity does not exist in the topology."""


class InfeasibleTrip(DronePlanError):
    """A site-to-site trip does not fit inside one time slot."""


class BatteryUnderflow(DronePlanError):
    """Slot consumption exceeds the stored energy (draw constraint)."""


class BatteryOverflow(DronePlanError):
    """Slot harvest plus charge exceeds battery headroom (storage constraint)."""


class TreeTooLarge(DronePlanError):
    """The full scenario tree would exceed the configured cap."""


class InconsistentSolution(DronePlanError):
    """Solver output fails independent re-validation (solver bug trap)."""


class TooLarge(DronePlanError):
    """Instance exceeds the brute-force enumeration cap."""


class RepairFailed(DronePlanError):
    """Rounding repair could not restore feasibility."""
