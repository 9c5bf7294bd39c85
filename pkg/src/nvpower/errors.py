class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(ValueError):
    """Bad configuration text, key or value."""


class NumericalError(ArithmeticError):
    """A numerical step failed (resolution, convergence, geometry rejection)."""


class ResolutionError(NumericalError):
    """Grid too coarse for the requested operation."""


class GeometryError(NumericalError):
    """Probe region does not fit the field map or is mostly masked."""
