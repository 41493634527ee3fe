"""Numerical laboratory for desingularized point-vortex flows.

The package studies how concentrated vortex cores of a two-dimensional ideal
fluid shadow the classical point-vortex system:

- :mod:`vortexlab.domains`: Green's functions, Robin functions, and the
  interaction Hamiltonian on analytic disks and masked lattices.
- :mod:`vortexlab.pointvortex`: the point-vortex flow with conservation
  diagnostics.
- :mod:`vortexlab.profiles`: the regularized vortex-core ansatz and its
  momentum-equation residual.
- :mod:`vortexlab.modes`: angular-mode inversion of the linearized core
  operator with far-field envelope certification.
- :mod:`vortexlab.sphere`: stereographic tools, kernel projections, and the
  quadratic-form gap.
- :mod:`vortexlab.transport`: inner and outer characteristic transport with
  contract-checked bounds.
- :mod:`vortexlab.euler`: a vorticity-stream solver for cross-validation.
- :mod:`vortexlab.cli`: the ``vortexlab`` command-line front end.
"""

from .domains import (DiskDomain, GridDomain, VortexConfiguration,
                      gamma_fundamental, grad_robin, grad_x_green, green,
                      kirchhoff_routh, regular_part, robin)
from .errors import (BoundaryApproachError, CollisionError, ConfigError,
                     DomainError, GuardError, InputError, SolvabilityError,
                     StabilityError, TrackingError, UnsupportedModeError,
                     ValidationError, VortexLabError)
from .euler import EulerResult, EulerRun, ansatz_field, energy_in_ball, evolve
from .modes import ModeRHS, fit_envelope, solve_linearized, solve_mode
from .pointvortex import Trajectory, integrate, vortex_rhs
from .profiles import BubbleParams, ansatz, ansatz_residual
from .sphere import (KernelSet, harmonic_pullback, project_orthogonal,
                     quadratic_form_gap)

__all__ = [
    "BoundaryApproachError", "BubbleParams", "CollisionError", "ConfigError",
    "DiskDomain", "DomainError", "EulerResult", "EulerRun", "GridDomain",
    "GuardError", "InputError", "KernelSet", "ModeRHS", "SolvabilityError",
    "StabilityError", "TrackingError", "Trajectory", "UnsupportedModeError",
    "ValidationError", "VortexConfiguration", "VortexLabError", "ansatz",
    "ansatz_field", "ansatz_residual", "energy_in_ball", "evolve",
    "fit_envelope", "gamma_fundamental", "grad_robin", "grad_x_green",
    "green", "harmonic_pullback", "integrate", "kirchhoff_routh",
    "project_orthogonal", "quadratic_form_gap", "regular_part", "robin",
    "solve_linearized", "solve_mode", "vortex_rhs",
]
