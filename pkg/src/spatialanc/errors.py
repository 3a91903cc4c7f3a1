"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the range where a function is validated."""


class SingularityError(ValueError):
    """Field requested at (or too close to) a point source."""


class ConvergenceError(RuntimeError):
    """A truncated series failed to reach its tolerance."""


class SceneError(ValueError):
    """Scene geometry violates one of its invariants."""


class SingularMatrixError(ValueError):
    """A linear system that must be solved is numerically singular."""


class EmptyGridError(ValueError):
    """Quadrature grid has no points inside the region."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""
