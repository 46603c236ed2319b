"""Exception types shared across the package."""


class GfrfError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(GfrfError, ValueError):
    """A signal spec, configuration value, or call precondition is invalid."""


class DimensionError(GfrfError, ValueError):
    """Operands have inconsistent shapes, grids, or orders."""


class ResourceError(GfrfError, RuntimeError):
    """A desk-scale size guard was exceeded (dense object would be too large)."""


class NumericalError(GfrfError, RuntimeError):
    """A factorization or optimization failed beyond the recovery policy."""
