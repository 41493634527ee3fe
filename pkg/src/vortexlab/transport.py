"""Characteristic solvers for the inner and outer advection problems.

Inner problem (core coordinates, slow source time): on the whole plane,

    dphi/ds + grad_perp(Gamma0(y) + R(y, eps^2 s)) . grad_y phi = E(y, eps^2 s)

with ``phi = 0`` at ``s = 0``.  The advecting field is an exact rotation
(``grad_perp Gamma0`` is tangential with angular rate ``4/(1+|y|^2)``) plus a
compactly supported perturbation ``grad_perp R``.  Characteristics integrate
in polar coordinates so the rotation is handled exactly: with no perturbation
the radius is conserved to machine precision and the angular advance per step
is exact, which is what makes long-span conservation checks meaningful.

Outer problem (physical coordinates): on a bounded domain,

    dphi/dt + grad_perp(stream)(x, t) . grad_x phi = E(x, t),

where the stream field has zero boundary trace, so characteristics cannot
leave the domain; the solver enforces that as a runtime guard.

Solutions are returned as evaluator objects computing the Duhamel integral

    phi(y, tau) = integral_0^tau E(ybar(s; tau, y), eps^2 s) ds

by trapezoid quadrature along backward characteristics, with Richardson
step-halving available as an error estimate.  Source and perturbation fields
are supplied as callables ``f(points, times)`` that broadcast over leading
axes; grid-backed fields can be wrapped with
:func:`vortexlab.fields.bilinear_evaluator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import FloatArray, as_points
from .domains import DiskDomain, GridDomain, perp
from .errors import GeometryError, ValidationError

__all__ = [
    "InnerAdvection",
    "OuterAdvection",
    "inner_characteristic",
    "solve_inner",
    "InnerSolution",
    "inner_gradient_probe",
    "InnerGradientReport",
    "outer_characteristic",
    "solve_outer",
    "OuterSolution",
    "support_propagation_check",
    "SupportPropagationReport",
]

_STEP_FRACTION = 0.05   # step = min(0.05 (1 + |y|^2), 1): ~1/30 of a rotation
_STEP_CAP = 1.0
_BOUND_SLACK = 1.0 + 1e-6


@dataclass(frozen=True)
class InnerAdvection:
    """Advecting field ``grad_perp(Gamma0 + R)`` for the inner problem.

    ``grad_perturbation(points, t)`` evaluates ``grad_y R`` (Cartesian, shape
    ``(..., 2)``) at unscaled time ``t``; ``None`` means ``R = 0``.  The
    perturbation must vanish for ``|y| >= support_radius`` and satisfy
    ``|grad R| <= gradient_bound * eps^2 (1 + |y|)`` when a bound constant is
    declared; both contracts are enforced during integration.  A declared
    ``hessian_bound`` (``|D^2 R| <= hessian_bound * eps^2``) certifies the
    smoothness needed by :func:`inner_gradient_probe`.
    """

    epsilon: float
    horizon: float
    grad_perturbation: Callable[[FloatArray, FloatArray], FloatArray] | None = None
    support_radius: float = math.inf
    gradient_bound: float | None = None
    hessian_bound: float | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.epsilon) and 0.0 < self.epsilon < 1.0):
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if not self.support_radius > 0.0:
            raise ValidationError("support radius must be positive")
        for name in ("gradient_bound", "hessian_bound"):
            val = getattr(self, name)
            if val is not None and not (np.isfinite(val) and val >= 0.0):
                raise ValidationError(f"{name} must be a finite nonnegative number")

    @property
    def tau_max(self) -> float:
        """Largest admissible value of the fast time ``s = t / eps^2``."""
        return self.horizon / self.epsilon**2

    def perturbation_velocity(self, points: FloatArray, s: FloatArray) -> FloatArray:
        """``grad_perp R`` at fast time ``s``, with the support contract applied."""
        if self.grad_perturbation is None:
            return np.zeros_like(points)
        rho = np.hypot(points[..., 0], points[..., 1])
        t = self.epsilon**2 * np.asarray(s, dtype=np.float64)
        grad = np.asarray(self.grad_perturbation(points, t), dtype=np.float64)
        if grad.shape != points.shape:
            raise ValidationError("grad_perturbation must return one vector per point")
        if self.gradient_bound is not None:
            mag = np.hypot(grad[..., 0], grad[..., 1])
            cap = self.gradient_bound * self.epsilon**2 * (1.0 + rho)
            if np.any(mag > cap * _BOUND_SLACK + 1e-300):
                raise ValidationError(
                    "perturbation gradient exceeds its declared linear-growth bound")
        grad = np.where((rho >= self.support_radius)[..., None], 0.0, grad)
        return perp(grad)


def _inner_polar_rates(adv: InnerAdvection, rho, theta, s):
    """Radial and angular rates of the inner characteristic system."""
    base = 4.0 / (1.0 + rho * rho)
    if adv.grad_perturbation is None:
        return np.zeros_like(rho), base
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    pts = np.stack([rho * cos_t, rho * sin_t], axis=-1)
    vel = adv.perturbation_velocity(pts, s)
    v_r = vel[..., 0] * cos_t + vel[..., 1] * sin_t
    v_t = -vel[..., 0] * sin_t + vel[..., 1] * cos_t
    return v_r, base + v_t / np.maximum(rho, 1e-12)


def _integrate_inner(adv: InnerAdvection, rho0, theta0, s_from: float, s_to: float,
                     *, step_scale: float = 1.0,
                     source: Callable | None = None):
    """March the polar characteristic system from ``s_from`` to ``s_to``.

    Steps are per-point: ``h_i = min(0.05 (1 + rho_i^2), 1) * step_scale``
    (clipped to the remaining span), so every radius resolves its own rotation
    scale.  When ``source`` is given, its trapezoid quadrature along the path
    is accumulated and returned alongside the final state.
    """
    rho = np.array(rho0, dtype=np.float64, copy=True)
    theta = np.array(theta0, dtype=np.float64, copy=True)
    s = np.full(rho.shape, float(s_from))
    direction = 1.0 if s_to >= s_from else -1.0
    accum = np.zeros(rho.shape) if source is not None else None
    if source is not None:
        f_here = source(rho, theta, s)
    while True:
        remaining = direction * (s_to - s)
        active = remaining > 1e-300
        if not np.any(active):
            break
        h = np.minimum(_STEP_FRACTION * (1.0 + rho * rho), _STEP_CAP) * step_scale
        h = np.where(active, np.minimum(h, remaining), 0.0)
        hs = direction * h
        r1, t1 = _inner_polar_rates(adv, rho, theta, s)
        r2, t2 = _inner_polar_rates(adv, rho + 0.5 * hs * r1, theta + 0.5 * hs * t1,
                                    s + 0.5 * hs)
        r3, t3 = _inner_polar_rates(adv, rho + 0.5 * hs * r2, theta + 0.5 * hs * t2,
                                    s + 0.5 * hs)
        r4, t4 = _inner_polar_rates(adv, rho + hs * r3, theta + hs * t3, s + hs)
        rho = rho + hs / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
        theta = theta + hs / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        rho = np.abs(rho)
        s = s + hs
        if source is not None:
            f_next = source(rho, theta, s)
            accum = accum + h * 0.5 * (f_here + f_next)
            f_here = f_next
    return rho, theta, accum


def inner_characteristic(adv: InnerAdvection, tau: float, y, s: float,
                         *, step_scale: float = 1.0) -> FloatArray:
    """Characteristic position ``ybar(s; tau, y)`` of the inner advection.

    Solves ``d ybar / ds = grad_perp(Gamma0 + R)(ybar, eps^2 s)`` with
    ``ybar(tau) = y``, for ``s`` before or after ``tau``.  ``step_scale``
    refines the per-point step; the path converges at fourth order in it.
    """
    tau = float(tau)
    s = float(s)
    slack = 1e-9 * max(1.0, adv.tau_max)
    for name, val in (("tau", tau), ("s", s)):
        if not -slack <= val <= adv.tau_max + slack:
            raise ValidationError(
                f"{name}={val:g} outside the admissible span [0, {adv.tau_max:g}]")
    if not 0.0 < step_scale <= 1.0:
        raise ValidationError("step_scale must lie in (0, 1]")
    pts = as_points(y, name="y")
    rho0 = np.hypot(pts[..., 0], pts[..., 1])
    theta0 = np.arctan2(pts[..., 1], pts[..., 0])
    rho, theta, _ = _integrate_inner(adv, rho0, theta0, tau, s,
                                     step_scale=step_scale)
    out = np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)
    return out.reshape(pts.shape)


@dataclass(frozen=True)
class InnerSolution:
    """Duhamel evaluator for the inner advection problem."""

    advection: InnerAdvection
    source: Callable[[FloatArray, FloatArray], FloatArray]

    def __call__(self, y, t) -> FloatArray | float:
        return self.evaluate(y, t)

    def evaluate(self, y, t, *, step_scale: float = 1.0) -> FloatArray | float:
        """``phi(y, t)`` at unscaled time ``t`` (fast time ``t / eps^2``)."""
        adv = self.advection
        t = float(t)
        if not -1e-12 <= t <= adv.horizon * (1.0 + 1e-9):
            raise ValidationError(
                f"time {t:g} outside the horizon [0, {adv.horizon:g}]")
        if not 0.0 < step_scale <= 1.0:
            raise ValidationError("step_scale must lie in (0, 1]")
        pts = as_points(y, name="y")
        rho0 = np.hypot(pts[..., 0], pts[..., 1])
        theta0 = np.arctan2(pts[..., 1], pts[..., 0])
        eps2 = adv.epsilon**2

        def source_polar(rho, theta, s):
            xy = np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)
            return np.asarray(self.source(xy, eps2 * s), dtype=np.float64)

        _, _, accum = _integrate_inner(adv, rho0, theta0, t / eps2, 0.0,
                                       step_scale=step_scale, source=source_polar)
        return float(accum) if accum.ndim == 0 else accum.reshape(pts.shape[:-1])

    def evaluate_with_error(self, y, t) -> tuple[FloatArray | float, float]:
        """Refined value and a Richardson step-halving error estimate."""
        coarse = np.asarray(self.evaluate(y, t))
        fine = np.asarray(self.evaluate(y, t, step_scale=0.5))
        estimate = float(np.max(np.abs(fine - coarse))) / 3.0
        return (float(fine) if fine.ndim == 0 else fine), estimate

    def pde_residual(self, y, t, *, dt: float = 1e-3, dx: float = 1e-3) -> FloatArray:
        """Centered-difference residual ``phi_t + V . grad phi - E`` at ``(y, t)``.

        ``phi_t`` is taken in fast time; converges at the quadrature order as
        the characteristic step is refined.
        """
        adv = self.advection
        pts = as_points(y, name="y")
        eps2 = adv.epsilon**2
        phi_plus = np.asarray(self.evaluate(pts, t + dt * eps2))
        phi_minus = np.asarray(self.evaluate(pts, t - dt * eps2))
        phi_t = (phi_plus - phi_minus) / (2.0 * dt)
        ex = np.zeros_like(pts)
        ex[..., 0] = dx
        ey = np.zeros_like(pts)
        ey[..., 1] = dx
        gx = (np.asarray(self.evaluate(pts + ex, t))
              - np.asarray(self.evaluate(pts - ex, t))) / (2.0 * dx)
        gy = (np.asarray(self.evaluate(pts + ey, t))
              - np.asarray(self.evaluate(pts - ey, t))) / (2.0 * dx)
        rho = np.hypot(pts[..., 0], pts[..., 1])
        base = 4.0 / (1.0 + rho * rho)
        vel = np.stack([-base * pts[..., 1], base * pts[..., 0]], axis=-1)
        vel = vel + adv.perturbation_velocity(pts, np.full(rho.shape, t / eps2))
        advect = vel[..., 0] * gx + vel[..., 1] * gy
        return phi_t + advect - np.asarray(self.source(pts, t))


def solve_inner(adv: InnerAdvection,
                E: Callable[[FloatArray, FloatArray], FloatArray]) -> InnerSolution:
    """Solution of the inner advection problem with zero initial data."""
    if not callable(E):
        raise ValidationError("the source E must be a callable (points, time) field")
    return InnerSolution(advection=adv, source=E)


@dataclass(frozen=True)
class InnerGradientReport:
    """Envelope measurement for the solution gradient of the inner problem.

    ``fitted_constant`` is the smallest C with
    ``(1+|y|)|grad phi| + |phi| <= C eps^-2 A (1+|y|)^alpha`` over the sampled
    disk ``|y| < probe_radius``.
    """

    fitted_constant: float
    epsilon: float
    alpha: float
    amplitude: float
    probe_radius: float
    radii: FloatArray
    ratios: FloatArray

    def csv_row(self) -> tuple[float, float, float]:
        return (self.epsilon, self.fitted_constant, self.alpha)


def inner_gradient_probe(adv: InnerAdvection,
                         E: Callable[[FloatArray, FloatArray], FloatArray],
                         *, amplitude: float, alpha: float,
                         times: tuple[float, ...] | None = None,
                         probe_radius: float | None = None,
                         n_radii: int = 10, n_theta: int = 8,
                         fd_step: float = 1e-4) -> InnerGradientReport:
    """Measure the weighted gradient envelope of the inner solution.

    Requires an advection with a declared second-derivative bound, and a
    source verified (by sampling) to satisfy
    ``(1+|y|)|grad E| + |E| + |E_t| <= amplitude (1+|y|)^alpha``.
    """
    if adv.hessian_bound is None:
        raise ValidationError(
            "gradient probe requires an advection with a certified "
            "second-derivative bound (hessian_bound)")
    if not amplitude > 0.0:
        raise ValidationError("amplitude must be positive")
    eps = adv.epsilon
    radius = 0.5 / eps if probe_radius is None else float(probe_radius)
    if not radius > 0.0:
        raise ValidationError("probe radius must be positive")
    if times is None:
        times = (0.25 * adv.horizon, 0.5 * adv.horizon, adv.horizon)

    radii = np.geomspace(max(0.05, 1e-3 * radius), 0.98 * radius, n_radii)
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    pts = (radii[:, None, None] * ring[None, :, :]).reshape(-1, 2)

    # spot-check the declared source envelope on the probe set
    rho = np.hypot(pts[:, 0], pts[:, 1])
    envelope = amplitude * (1.0 + rho) ** alpha
    h_chk = 1e-5 * (1.0 + rho)
    for t in times:
        e0 = np.asarray(E(pts, np.full(rho.shape, t)))
        gx = (np.asarray(E(pts + np.stack([h_chk, np.zeros_like(h_chk)], -1), t))
              - np.asarray(E(pts - np.stack([h_chk, np.zeros_like(h_chk)], -1), t)))
        gy = (np.asarray(E(pts + np.stack([np.zeros_like(h_chk), h_chk], -1), t))
              - np.asarray(E(pts - np.stack([np.zeros_like(h_chk), h_chk], -1), t)))
        grad = np.hypot(gx, gy) / (2.0 * h_chk)
        dt_chk = 1e-5 * max(adv.horizon, 1e-12)
        et = (np.asarray(E(pts, min(t + dt_chk, adv.horizon)))
              - np.asarray(E(pts, max(t - dt_chk, 0.0)))) / (2.0 * dt_chk)
        measured = (1.0 + rho) * grad + np.abs(e0) + np.abs(et)
        if np.any(measured > envelope * (1.0 + 1e-6) + 1e-12 * amplitude):
            raise ValidationError(
                "source field violates its declared amplitude/decay envelope")

    solution = solve_inner(adv, E)
    ratios = np.zeros((len(times), pts.shape[0]))
    h_fd = fd_step * (1.0 + rho)
    offsets = np.stack([h_fd, np.zeros_like(h_fd)], -1), np.stack(
        [np.zeros_like(h_fd), h_fd], -1)
    for i, t in enumerate(times):
        batch = np.concatenate([pts, pts + offsets[0], pts - offsets[0],
                                pts + offsets[1], pts - offsets[1]], axis=0)
        vals = np.asarray(solution.evaluate(batch, t)).reshape(5, -1)
        grad = np.hypot(vals[1] - vals[2], vals[3] - vals[4]) / (2.0 * h_fd)
        weighted = (1.0 + rho) * grad + np.abs(vals[0])
        ratios[i] = weighted * eps**2 / envelope
    per_point = ratios.max(axis=0).reshape(len(radii), n_theta)
    return InnerGradientReport(
        fitted_constant=float(per_point.max()), epsilon=eps, alpha=float(alpha),
        amplitude=float(amplitude), probe_radius=radius, radii=radii,
        ratios=per_point.max(axis=1))


# ---------------------------------------------------------------------------
# outer problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OuterAdvection:
    """Advecting stream field on a bounded domain for the outer problem.

    ``stream(points, t)`` evaluates the total stream function, which must have
    zero boundary trace (checked by sampling on analytic disks).  ``velocity``
    optionally supplies ``grad_perp stream`` exactly; otherwise it is taken by
    centered differences of ``stream``.  ``vortex_tracks(t) -> (N, 2)`` gives
    the unperturbed vortex positions used by support-propagation probes, and
    ``perturbation_gradient``/``perturbation_bound`` declare the split
    ``stream = base + Q`` with ``|grad Q| <= bound * sum_j(|x - xi_j| + eps)``.
    """

    stream: Callable[[FloatArray, float], FloatArray]
    domain: DiskDomain | GridDomain
    horizon: float
    velocity: Callable[[FloatArray, float], FloatArray] | None = None
    vortex_tracks: Callable[[float], FloatArray] | None = None
    perturbation_gradient: Callable[[FloatArray, float], FloatArray] | None = None
    perturbation_bound: float | None = None
    epsilon: float = 0.0
    boundary_tol: float = field(default=1e-8, repr=False)

    def __post_init__(self) -> None:
        if not callable(self.stream):
            raise ValidationError("stream must be a callable (points, time) field")
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if isinstance(self.domain, DiskDomain):
            self._check_boundary_trace()

    def _check_boundary_trace(self) -> None:
        angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        ring = self.domain.radius * np.stack([np.cos(angles), np.sin(angles)], -1)
        probe = 0.5 * ring  # interior scale reference
        for t in (0.0, 0.5 * self.horizon, self.horizon):
            trace = np.asarray(self.stream(ring, t))
            scale = max(float(np.max(np.abs(self.stream(probe, t)))), 1e-30)
            if np.max(np.abs(trace)) > self.boundary_tol * scale + 1e-14:
                raise ValidationError(
                    "stream field has a nonzero boundary trace; outer "
                    "characteristics would not stay inside the domain")

    def advecting_velocity(self, points: FloatArray, t: float) -> FloatArray:
        if self.velocity is not None:
            vel = np.asarray(self.velocity(points, t), dtype=np.float64)
            if vel.shape != points.shape:
                raise ValidationError("velocity must return one vector per point")
            return vel
        h = 1e-6 * self.domain.diameter
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        sx = (np.asarray(self.stream(points + ex, t))
              - np.asarray(self.stream(points - ex, t))) / (2.0 * h)
        sy = (np.asarray(self.stream(points + ey, t))
              - np.asarray(self.stream(points - ey, t))) / (2.0 * h)
        return np.stack([sy, -sx], axis=-1)


def _clip_to_domain(domain, pts: FloatArray, escape_tol: float) -> FloatArray:
    """Project marginal excursions back inside; raise on real escapes."""
    dist = np.asarray(domain.boundary_distance(pts))
    outside = dist < 0.0
    if not np.any(outside):
        return pts
    if np.any(dist < -escape_tol):
        worst = float(np.min(dist))
        raise GeometryError(
            f"outer characteristic escaped the domain by {-worst:.3e} "
            f"(tolerance {escape_tol:.3e}); the stream field is inconsistent "
            "with a zero boundary trace")
    if isinstance(domain, DiskDomain):
        r = np.hypot(pts[..., 0], pts[..., 1])
        factor = np.where(outside, (domain.radius * (1.0 - 1e-12)) / r, 1.0)
        return pts * factor[..., None]
    # lattice domains: pull the offending points straight back to the nearest
    # sampled inside location along the outward ray toward the center
    center = np.zeros(2)
    pulled = pts.copy()
    idx = np.argwhere(outside)
    for pos in idx:
        p = pulled[tuple(pos)]
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            cand = center + (p - center) * mid
            if domain.contains(cand):
                lo = mid
            else:
                hi = mid
        pulled[tuple(pos)] = center + (p - center) * lo
    return pulled


def _integrate_outer(adv: OuterAdvection, pts0: FloatArray, t_from: float,
                     t_to: float, *, step_scale: float = 1.0,
                     source: Callable | None = None):
    """RK4 march of outer characteristics with per-point adaptive steps.

    The step obeys a rotation-resolving rule analogous to the inner solver:
    ``h = 0.1 * (distance scale) / speed``, capped at a sixteenth of the span,
    so points near a vortex take proportionally small steps.
    """
    domain = adv.domain
    escape_tol = 1e-6 * domain.diameter
    pts = np.array(pts0, dtype=np.float64, copy=True)
    t = np.full(pts.shape[:-1], float(t_from))
    direction = 1.0 if t_to >= t_from else -1.0
    h_max = max(abs(t_to - t_from) / 16.0, 1e-12)
    accum = np.zeros(pts.shape[:-1]) if source is not None else None
    if source is not None:
        f_here = np.asarray(source(pts, t))
    while True:
        remaining = direction * (t_to - t)
        active = remaining > 1e-300
        if not np.any(active):
            break
        k1 = adv.advecting_velocity(pts, t)
        speed = np.hypot(k1[..., 0], k1[..., 1])
        scale = np.maximum(np.asarray(domain.boundary_distance(pts)),
                           0.02 * domain.diameter)
        h = np.minimum(0.1 * scale / np.maximum(speed, 1e-14), h_max) * step_scale
        h = np.where(active, np.minimum(h, remaining), 0.0)
        hs = direction * h
        k2 = adv.advecting_velocity(pts + 0.5 * hs[..., None] * k1, t + 0.5 * hs)
        k3 = adv.advecting_velocity(pts + 0.5 * hs[..., None] * k2, t + 0.5 * hs)
        k4 = adv.advecting_velocity(pts + hs[..., None] * k3, t + hs)
        pts = pts + hs[..., None] / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        pts = _clip_to_domain(domain, pts, escape_tol)
        t = t + hs
        if source is not None:
            f_next = np.asarray(source(pts, t))
            accum = accum + h * 0.5 * (f_here + f_next)
            f_here = f_next
    return pts, accum


def outer_characteristic(adv: OuterAdvection, t: float, x, s: float,
                         *, step_scale: float = 1.0) -> FloatArray:
    """Characteristic position ``xbar(s; t, x)`` of the outer advection."""
    for name, val in (("t", float(t)), ("s", float(s))):
        if not -1e-12 <= val <= adv.horizon * (1.0 + 1e-9):
            raise ValidationError(
                f"{name}={val:g} outside the horizon [0, {adv.horizon:g}]")
    if not 0.0 < step_scale <= 1.0:
        raise ValidationError("step_scale must lie in (0, 1]")
    pts = adv.domain.require_interior(as_points(x, name="x"), name="x")
    out, _ = _integrate_outer(adv, pts, float(t), float(s), step_scale=step_scale)
    return out.reshape(pts.shape)


@dataclass(frozen=True)
class OuterSolution:
    """Duhamel evaluator for the outer advection problem."""

    advection: OuterAdvection
    source: Callable[[FloatArray, FloatArray], FloatArray]

    def __call__(self, x, t) -> FloatArray | float:
        return self.evaluate(x, t)

    def evaluate(self, x, t, *, step_scale: float = 1.0) -> FloatArray | float:
        adv = self.advection
        t = float(t)
        if not -1e-12 <= t <= adv.horizon * (1.0 + 1e-9):
            raise ValidationError(f"time {t:g} outside the horizon [0, {adv.horizon:g}]")
        if not 0.0 < step_scale <= 1.0:
            raise ValidationError("step_scale must lie in (0, 1]")
        pts = adv.domain.require_interior(as_points(x, name="x"), name="x")
        _, accum = _integrate_outer(adv, pts, t, 0.0, step_scale=step_scale,
                                    source=self.source)
        return float(accum) if accum.ndim == 0 else accum.reshape(pts.shape[:-1])

    def evaluate_with_error(self, x, t) -> tuple[FloatArray | float, float]:
        """Refined value and a Richardson step-halving error estimate."""
        coarse = np.asarray(self.evaluate(x, t))
        fine = np.asarray(self.evaluate(x, t, step_scale=0.5))
        estimate = float(np.max(np.abs(fine - coarse))) / 3.0
        return (float(fine) if fine.ndim == 0 else fine), estimate

    def pde_residual(self, x, t, *, dt: float = 1e-4, dx: float = 1e-4) -> FloatArray:
        """Centered-difference residual ``phi_t + V . grad phi - E`` at ``(x, t)``."""
        adv = self.advection
        pts = adv.domain.require_interior(as_points(x, name="x"), name="x")
        phi_t = (np.asarray(self.evaluate(pts, t + dt))
                 - np.asarray(self.evaluate(pts, t - dt))) / (2.0 * dt)
        ex = np.array([dx, 0.0])
        ey = np.array([0.0, dx])
        gx = (np.asarray(self.evaluate(pts + ex, t))
              - np.asarray(self.evaluate(pts - ex, t))) / (2.0 * dx)
        gy = (np.asarray(self.evaluate(pts + ey, t))
              - np.asarray(self.evaluate(pts - ey, t))) / (2.0 * dx)
        vel = adv.advecting_velocity(pts, np.full(pts.shape[:-1], float(t)))
        advect = vel[..., 0] * gx + vel[..., 1] * gy
        return phi_t + advect - np.asarray(self.source(pts, np.full(pts.shape[:-1], float(t))))


def solve_outer(adv: OuterAdvection,
                E: Callable[[FloatArray, FloatArray], FloatArray]) -> OuterSolution:
    """Solution of the outer advection problem with zero initial data."""
    if not callable(E):
        raise ValidationError("the source E must be a callable (points, time) field")
    return OuterSolution(advection=adv, source=E)


@dataclass(frozen=True)
class SupportPropagationReport:
    """Largest silence factor of the outer solution near the vortex tracks.

    ``beta`` is the largest sampled factor such that ``|phi| < tolerance`` on
    every sampled circle of radius ``beta' * delta`` with ``beta' <= beta``
    around every tracked vortex at every sampled time (capped at 1, the radius
    of the source-free balls themselves).
    """

    beta: float
    delta: float
    tolerance: float
    times: FloatArray
    beta_grid: FloatArray
    max_abs_by_beta: FloatArray

    def csv_rows(self):
        return [(float(b), float(m)) for b, m in
                zip(self.beta_grid, self.max_abs_by_beta)]


def support_propagation_check(adv: OuterAdvection,
                              E: Callable[[FloatArray, FloatArray], FloatArray],
                              delta: float, *,
                              times: tuple[float, ...] | None = None,
                              beta_grid: FloatArray | None = None,
                              n_theta: int = 16,
                              tolerance: float = 1e-12) -> SupportPropagationReport:
    """Measure how far the solution stays silent around each vortex.

    The source must vanish on the balls of radius ``delta`` around the tracked
    vortex positions (verified by sampling); the report then gives the largest
    fraction ``beta`` of that radius on which the solution itself vanishes.
    """
    if adv.vortex_tracks is None:
        raise ValidationError("support propagation requires vortex tracks")
    if not delta > 0.0:
        raise ValidationError("delta must be positive")
    if times is None:
        times = tuple(np.linspace(0.2, 1.0, 5) * adv.horizon)
    if beta_grid is None:
        beta_grid = np.linspace(0.05, 1.0, 20)
    beta_grid = np.asarray(beta_grid, dtype=np.float64)
    if np.any(beta_grid <= 0.0) or np.any(np.diff(beta_grid) <= 0.0):
        raise ValidationError("beta grid must be positive and increasing")
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    # verify the source-free contract on the delta-balls
    for t in times:
        centers = np.atleast_2d(np.asarray(adv.vortex_tracks(float(t))))
        for c in centers:
            for frac in (0.3, 0.7, 0.999):
                probe = c + frac * delta * ring
                inside = np.asarray(adv.domain.contains(probe))
                if np.any(np.abs(np.asarray(E(probe[inside], float(t)))) > 0.0):
                    raise ValidationError(
                        "source does not vanish on the declared vortex balls")

    solution = solve_outer(adv, E)
    max_abs = np.zeros(beta_grid.size)
    for t in times:
        centers = np.atleast_2d(np.asarray(adv.vortex_tracks(float(t))))
        for c in centers:
            pts = c[None, None, :] + (beta_grid[:, None, None] * delta) * ring[None, :, :]
            flat = pts.reshape(-1, 2)
            inside = np.asarray(adv.domain.contains(flat))
            vals = np.zeros(flat.shape[0])
            if np.any(inside):
                vals[inside] = np.asarray(solution.evaluate(flat[inside], float(t)))
            max_abs = np.maximum(max_abs,
                                 np.abs(vals.reshape(beta_grid.size, n_theta)).max(axis=1))
    silent = max_abs < tolerance
    if silent.all():
        beta = 1.0
    elif not silent[0]:
        beta = 0.0
    else:
        beta = float(beta_grid[np.argmin(silent) - 1])
    return SupportPropagationReport(beta=beta, delta=float(delta),
                                    tolerance=float(tolerance),
                                    times=np.asarray(times, dtype=np.float64),
                                    beta_grid=beta_grid, max_abs_by_beta=max_abs)
