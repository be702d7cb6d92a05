"""Exception hierarchy shared by all modules."""


class EsfemError(Exception):
    """Base class for library errors."""


class DomainError(EsfemError, ValueError):
    """A time or parameter lies outside the admissible range."""


class GeometryError(EsfemError):
    """A point cannot be related to the surface (outside reach, not on mesh)."""


class NumericError(EsfemError, ArithmeticError):
    """An iterative method failed to converge or produced non-finite values."""


class DivergenceError(NumericError):
    """Time integration produced non-finite values."""

    def __init__(self, step, time):
        super().__init__(f"non-finite solution at step {step} (t={time:.6g})")
        self.step = step
        self.time = time


class MeshError(EsfemError):
    """The triangulation is degenerate or not admissible."""


class ConfigError(EsfemError, ValueError):
    """Invalid run configuration."""
