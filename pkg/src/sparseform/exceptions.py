"""Exception hierarchy shared by every sparseform module."""


class SparseformError(Exception):
    """Base class for all errors raised by sparseform."""


class StructuralError(SparseformError, ValueError):
    """A cube, family or step function does not fit the grid it is used with."""


class ParameterError(SparseformError, ValueError):
    """An exponent, factor or other scalar parameter is out of range."""


class DomainError(SparseformError, ValueError):
    """A value lies outside the domain of the requested operation."""


class DegenerateWeightError(DomainError):
    """A weight has zero mass on a cube where a positive mass is required."""


class CapacityError(SparseformError, RuntimeError):
    """An exhaustive computation would exceed its configured size cap."""


class NumericError(SparseformError, RuntimeError):
    """A numerical procedure failed to bracket or converge."""


class ConfigError(SparseformError, ValueError):
    """An experiment configuration failed validation."""
