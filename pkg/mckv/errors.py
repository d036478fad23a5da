"""Exception hierarchy for mckv.

Every error is a ``ValueError`` so callers that only care about bad input can
catch the builtin. Blow-up is not an error: solvers record a ``StopEvent``.
"""


class MckvError(ValueError):
    """Base class for all mckv errors."""


class InvalidDensityError(MckvError):
    """A density has negative, non-finite or excess-mass values."""


class DomainError(MckvError):
    """An argument lies outside the domain of the operation."""


class UnboundedMomentError(MckvError):
    """A tabulated density does not decay fast enough for the moment to exist."""


class ConfigurationError(MckvError):
    """Inconsistent grid, scenario or sampling configuration."""


class SchemeFailureError(MckvError):
    """The discrete scheme produced values it is not allowed to produce."""
