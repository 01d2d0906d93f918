"""Exception types shared across the package."""


class BikeShareError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(BikeShareError):
    """Invalid parameter, argument or configuration value."""


class FullSystemError(BikeShareError):
    """Essentially every station is full: the persistent-return rate diverges."""


class NegativeFleetError(BikeShareError):
    """The implied number of riding bikes is negative: not a reachable state."""


class StepInstabilityError(BikeShareError):
    """A single integration step needed more simplex repair than the budget allows."""

    def __init__(self, message: str, time: float, correction: float):
        super().__init__(message)
        self.time = time
        self.correction = correction


class DomainExitError(BikeShareError):
    """The trajectory left the assumed domain (empty or full fraction above 1 - delta)."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class DegenerateCaseError(BikeShareError):
    """Equal birth and death rates: the two-root geometric representation degenerates."""


class NoBracketError(BikeShareError):
    """The scalar defect does not change sign on the search interval."""

    def __init__(self, message: str, lo: float, hi: float, defect_lo: float, defect_hi: float):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.defect_lo = defect_lo
        self.defect_hi = defect_hi


class AssumptionViolationError(BikeShareError):
    """The solved fixed point sits outside the problematic-station bound 1 - delta."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class MultipleFixedPointsError(BikeShareError):
    """Multi-start probing found more than one distinct fixed point."""

    def __init__(self, message: str, results):
        super().__init__(message)
        self.results = results


class EmptyMeasurementError(BikeShareError):
    """A statistic was requested from a run with no measured occupancy."""


class EmptyFeasibleSetError(BikeShareError):
    """No candidate in the search grid satisfies the design constraints."""


class InvariantViolationError(BikeShareError):
    """An internal consistency check failed: a bug, never a model state."""
