"""Exception types raised across the package."""


class ImplosionError(Exception):
    """Base class for all package errors."""


class DomainError(ImplosionError, ValueError):
    """A parameter lies outside the domain of a formula."""


class NoRootError(ImplosionError):
    """A bracketed root search found no sign change."""


class BracketError(NoRootError):
    """The shooting bracket does not straddle a root of the mismatch."""


class TangencyError(ImplosionError):
    """The incoming orbit reaches the sonic point along the fast direction."""


class SmoothnessError(ImplosionError):
    """The Taylor agreement at the sonic point is below the requested order."""


class IntegrationError(ImplosionError):
    """An ODE integration exceeded its step budget or produced non-finite values."""


class GapError(ImplosionError):
    """Trajectories do not cover the requested range of log-radius."""


class PropertyViolation(ImplosionError):
    """A profile inequality failed; the message names it and the location."""

    def __init__(self, name, radius, value):
        self.name = name
        self.radius = radius
        self.value = value
        super().__init__(f"{name} violated at r={radius:.6g} (value {value:.6g})")


class ParseError(ImplosionError):
    """A text file or configuration could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SimulationError(ImplosionError):
    """A time step failed; carries the simulation time."""

    def __init__(self, message, time=None):
        self.time = time
        if time is not None:
            message = f"{message} (at time {time:.17g})"
        super().__init__(message)


class NonPositiveDensity(SimulationError):
    pass


class CFLViolation(SimulationError):
    pass
