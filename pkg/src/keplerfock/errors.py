"""Exception classes.

The CLI maps these to exit codes: ConfigError -> 2, PreconditionError -> 3,
ConvergenceError -> 4.
"""


class KeplerFockError(Exception):
    """Base class for library errors."""


class ConfigError(KeplerFockError, ValueError):
    """Malformed configuration or unparseable input."""


class PreconditionError(KeplerFockError, ValueError):
    """An input violates a documented precondition."""


class DomainError(PreconditionError):
    """Point outside the domain of a map (north pole, Coulomb singularity)."""


class CollisionTimeError(PreconditionError):
    """Kepler state requested at the collision instant of a collision orbit."""


class BranchPointError(PreconditionError):
    """Complex logarithm evaluated too close to its branch point."""


class GridCoverageError(PreconditionError):
    """A grid does not capture enough of the state's mass."""

    def __init__(self, message, captured_mass=None):
        super().__init__(message)
        self.captured_mass = captured_mass


class ConvergenceError(KeplerFockError, RuntimeError):
    """A quadrature, root find or sampler failed to reach its tolerance."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate
