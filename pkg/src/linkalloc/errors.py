"""Exception types shared across the package.

The CLI maps these onto exit codes: scenario/config problems exit with 1,
solver and feasibility problems with 2.
"""


class LinkAllocError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(LinkAllocError, ValueError):
    """Bad argument to a numeric operation (shape, range, NaN, ...)."""


class ValidationError(LinkAllocError):
    """A scenario or config document violates the schema or an invariant."""


class ConfigurationError(ValidationError):
    """A referenced resource (e.g. a PER table for an MCS) is missing."""


class InfeasibleError(LinkAllocError):
    """No feasible solution exists for the given instance."""


class SolverError(LinkAllocError):
    """A solver failed or returned something that violates its own contract."""


class SizeLimitError(LinkAllocError):
    """Problem too large for an enumeration-based routine's guard."""
