"""Point-vortex dynamics: kappa_j xidot_j = grad^perp_{xi_j} K.

Fixed-step classical Runge-Kutta integration of the N-vortex system with
hard guards: a step is only accepted while the configuration stays
collision-free (pairwise distance above 1e-6 domain diameters) and clear of
the boundary (above 1e-3 domain diameters). The interaction energy ``K`` and
the minimum separation are recorded at every sample so conservation can be
asserted after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import FloatArray, as_float_array
from .domains import (
    BOUNDARY_FACTOR,
    COLLISION_FACTOR,
    VortexConfiguration,
    grad_perp_K,
    kirchhoff_routh,
)
from .errors import (
    BoundaryApproachError,
    CollisionError,
    DomainError,
    ValidationError,
)

__all__ = ["Trajectory", "vortex_rhs", "integrate", "min_separation"]


@dataclass(frozen=True)
class Trajectory:
    """Sampled vortex trajectory with conservation diagnostics.

    ``states`` has shape (M, N, 2); ``energies`` holds K(t_i); ``separations``
    holds the minimum pairwise distance (N >= 2) or the boundary clearance
    (N = 1) at each sample.
    """

    times: FloatArray
    states: FloatArray
    energies: FloatArray
    separations: FloatArray
    strengths: FloatArray

    def __post_init__(self) -> None:
        times = as_float_array(self.times, name="times")
        if times.ndim != 1 or times.size == 0:
            raise ValidationError("trajectory times must be a nonempty 1-d array")
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("trajectory times must be strictly increasing")
        states = as_float_array(self.states, name="states")
        if states.ndim != 3 or states.shape[0] != times.size or states.shape[2] != 2:
            raise ValidationError(f"states must be (M, N, 2) matching times, got {states.shape}")
        for name in ("energies", "separations"):
            arr = as_float_array(getattr(self, name), name=name)
            if arr.shape != times.shape:
                raise ValidationError(f"{name} must match times, got shape {arr.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "energies", as_float_array(self.energies))
        object.__setattr__(self, "separations", as_float_array(self.separations))
        object.__setattr__(self, "strengths", as_float_array(self.strengths))

    @property
    def count(self) -> int:
        return int(self.states.shape[1])

    def angular_impulse(self) -> FloatArray:
        """``sum_j kappa_j |xi_j(t)|^2`` per sample (conserved on the disk)."""
        r2 = np.sum(self.states**2, axis=-1)
        return r2 @ self.strengths

    def to_csv(self, path) -> None:
        """Write ``t,xi_1x,xi_1y,...,K,min_sep`` rows (floats via repr round-trip)."""
        n = self.count
        header = ["t"]
        for j in range(1, n + 1):
            header += [f"xi_{j}x", f"xi_{j}y"]
        header += ["K", "min_sep"]
        lines = [",".join(header)]
        for i, t in enumerate(self.times):
            row = [repr(float(t))]
            for j in range(n):
                row += [repr(float(self.states[i, j, 0])), repr(float(self.states[i, j, 1]))]
            row += [repr(float(self.energies[i])), repr(float(self.separations[i]))]
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")


def vortex_rhs(domain, cfg: VortexConfiguration) -> FloatArray:
    """Velocities ``xidot_j = kappa_j^{-1} grad^perp_{xi_j} K``, shape (N, 2)."""
    if np.any(cfg.strengths == 0.0):
        raise ValidationError("degenerate vortex strength: every kappa_j must be nonzero")
    return grad_perp_K(domain, cfg) / cfg.strengths[:, None]


def _separation(domain, cfg: VortexConfiguration) -> float:
    if cfg.count >= 2:
        return cfg.min_pairwise_distance()
    return float(np.min(domain.boundary_distance(cfg.positions)))


def _check_guards(domain, cfg: VortexConfiguration, t: float) -> None:
    d_min = cfg.min_pairwise_distance()
    if d_min < COLLISION_FACTOR * domain.diameter:
        raise CollisionError(
            f"vortex collision at t = {t:.6g}: min separation {d_min:.3e}", time=t)
    clearance = float(np.min(domain.boundary_distance(cfg.positions)))
    if clearance < BOUNDARY_FACTOR * domain.diameter:
        raise BoundaryApproachError(
            f"boundary approach at t = {t:.6g}: clearance {clearance:.3e}", time=t)


def _rk4_step(domain, cfg: VortexConfiguration, dt: float, t: float) -> VortexConfiguration:
    x0 = cfg.positions
    try:
        k1 = vortex_rhs(domain, cfg)
        k2 = vortex_rhs(domain, cfg.with_positions(x0 + 0.5 * dt * k1))
        k3 = vortex_rhs(domain, cfg.with_positions(x0 + 0.5 * dt * k2))
        k4 = vortex_rhs(domain, cfg.with_positions(x0 + dt * k3))
    except DomainError as exc:
        raise BoundaryApproachError(
            f"boundary approach at t = {t:.6g}: an integration stage left the domain",
            time=t) from exc
    return cfg.with_positions(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def integrate(domain, cfg: VortexConfiguration, T: float, dt: float) -> Trajectory:
    """Integrate the N-vortex system over [0, T] with fixed RK4 steps ``dt``."""
    if not (np.isfinite(T) and T > 0.0):
        raise ValidationError(f"horizon T must be positive, got {T}")
    if not (np.isfinite(dt) and 0.0 < dt <= T):
        raise ValidationError(f"step dt must satisfy 0 < dt <= T, got {dt}")
    if np.any(cfg.strengths == 0.0):
        raise ValidationError("degenerate vortex strength: every kappa_j must be nonzero")
    domain.require_interior(cfg.positions, name="positions")

    times = [0.0]
    states = [cfg.positions.copy()]
    _check_guards(domain, cfg, 0.0)
    energies = [kirchhoff_routh(domain, cfg)]
    separations = [_separation(domain, cfg)]

    t = 0.0
    current = cfg
    while t < T - 1e-12 * T:
        step = min(dt, T - t)
        current = _rk4_step(domain, current, step, t)
        t += step
        _check_guards(domain, current, t)
        times.append(t)
        states.append(current.positions.copy())
        energies.append(kirchhoff_routh(domain, current))
        separations.append(_separation(domain, current))

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        energies=np.array(energies),
        separations=np.array(separations),
        strengths=cfg.strengths.copy(),
    )


def min_separation(traj: Trajectory) -> float:
    """Minimum over time of the recorded separation diagnostic."""
    if traj.times.size == 0:
        raise ValidationError("empty trajectory")
    return float(np.min(traj.separations))
