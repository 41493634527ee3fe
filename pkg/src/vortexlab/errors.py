"""Exception taxonomy for the vortex laboratory.

Two families matter to callers:

* :class:`InputError` and its subclasses signal bad arguments, bad
  configuration, or violated preconditions -- the caller asked for something
  the library refuses to attempt (including supplied fields that fail a
  solvability, mass, or orthogonality precondition).
* :class:`GuardError` and its subclasses signal a runtime guard trip inside
  an otherwise well-posed computation -- a vortex collision, a CFL
  violation, a characteristic escaping its domain.

The command-line driver maps :class:`InputError` to exit code 1 and
:class:`GuardError` to exit code 2.
"""

from __future__ import annotations

__all__ = [
    "VortexLabError",
    "InputError",
    "ValidationError",
    "ConfigError",
    "DomainError",
    "UnsupportedModeError",
    "PoleError",
    "SingularEvaluationError",
    "SolvabilityError",
    "MassBalanceError",
    "GuardError",
    "CollisionError",
    "BoundaryApproachError",
    "StabilityError",
    "TrackingError",
    "GeometryError",
    "SolverError",
]


class VortexLabError(Exception):
    """Base class for every library-specific error."""


class InputError(VortexLabError):
    """Bad arguments, configuration, or violated preconditions."""


class ValidationError(InputError):
    """An argument fails structural validation (shape, finiteness, range)."""


class ConfigError(InputError):
    """A run-configuration file is malformed or contains unknown keys."""


class DomainError(InputError):
    """A point, ball, or mask violates the geometry it is used with."""


class UnsupportedModeError(InputError):
    """An angular mode index outside the solvable set (e.g. k = 0)."""


class PoleError(InputError):
    """Stereographic projection evaluated at the projection pole."""


class SingularEvaluationError(InputError):
    """Evaluation requested exactly at a singular scale (e.g. a vortex center)."""


class SolvabilityError(InputError):
    """A necessary orthogonality/solvability condition fails on supplied data."""


class MassBalanceError(InputError):
    """A field that must have zero integral does not (beyond tolerance)."""


class GuardError(VortexLabError):
    """A runtime guard tripped during an otherwise valid computation."""

    def __init__(self, message: str, *, time: float | None = None):
        super().__init__(message)
        self.time = time


class CollisionError(GuardError):
    """Two vortices came within the collision threshold."""

    def __init__(self, message: str, *, time: float | None = None,
                 pair: tuple[int, int] | None = None):
        super().__init__(message, time=time)
        self.pair = pair


class BoundaryApproachError(GuardError):
    """A vortex came within the boundary-approach threshold."""

    def __init__(self, message: str, *, time: float | None = None,
                 index: int | None = None):
        super().__init__(message, time=time)
        self.index = index


class StabilityError(GuardError):
    """A time step violates the advective stability (CFL) constraint."""


class TrackingError(GuardError):
    """A vorticity-centroid tracking window lost the feature it tracks."""


class GeometryError(GuardError):
    """A characteristic escaped the domain beyond the escape tolerance."""


class SolverError(GuardError):
    """A linear or nonlinear solve failed to produce a usable result."""
