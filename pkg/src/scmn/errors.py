"""Exception types shared across the package."""


class ScmnError(Exception):
    """Base class for all package errors."""


class DomainError(ScmnError, ValueError):
    """An argument fell outside the domain of the operation."""


class ValidationError(ScmnError, ValueError):
    """A parameter set violates a precondition (degrees, coupling, grid size)."""


class ChannelConfigError(ValidationError):
    """A channel could not be resolved or its tables are malformed."""


class NoSolutionError(ScmnError):
    """A root-finding problem has no solution in the admissible range."""


class ExcludedPointError(DomainError):
    """x1 maps to x2[x1] outside [0, 1], so it is not a fixed point."""
