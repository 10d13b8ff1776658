"""Exception types raised by the simulator."""


class CoopSurfError(Exception):
    """Base class for all package errors."""


class ConfigError(CoopSurfError, ValueError):
    """Invalid scenario configuration; ``field`` and ``line`` locate the problem."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.message = message
        self.field = field
        self.line = line

    def __str__(self):
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(f"field '{self.field}'")
        return f"{self.message} ({', '.join(where)})" if where else self.message


class DomainError(CoopSurfError, ValueError):
    """Argument outside the domain where an expression is defined."""


class WavelengthRangeError(CoopSurfError, ValueError):
    """Wavelength (or height) outside the supported range."""


class SingularityError(CoopSurfError, ArithmeticError):
    """Expression evaluated exactly at a pole."""


class UnsupportedOperationError(CoopSurfError, TypeError):
    """Operation not defined for the given model variant."""


class NumericError(CoopSurfError, ArithmeticError):
    """Generic numerical failure (eigensolver, linear solve, degenerate state)."""


class IntegrationError(NumericError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message, worst_segment=None, error=None):
        super().__init__(message)
        self.worst_segment = worst_segment
        self.error = error


class ModelMismatchError(NumericError):
    """A fitted model does not describe the data within tolerance."""


class GridMismatchError(CoopSurfError, ValueError):
    """Two runs cannot be compared because their time grids differ."""
