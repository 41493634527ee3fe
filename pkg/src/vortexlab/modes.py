"""Mode-by-mode inversion of the linearized Liouville transport operator.

The master equation on the plane is

    grad^perp Gamma0 . grad( Delta psi + U0 psi ) + g = 0,

whose angular Fourier modes decouple: with ``psi = sum p_k(rho) e^{ik theta}``
and ``g = sum g_k(rho) e^{ik theta}`` each mode solves the radial ODE

    L_k[p] := p'' + p'/rho - k^2 p / rho^2 + U0 p = f_k,
    f_k = i (1 + rho^2) g_k / (4 k),                                   (*)

on (0, 8R] with boundary value ``p_k(8R) = 0``.  Mode zero is annihilated by
the angular derivative, so a nonzero ``g_0`` is not solvable.  The operator
``L_k`` has the explicit regular homogeneous solution ``zeta_1 =
rho/(1+rho^2)`` for |k| = 1 (the translation kernel) and numerically
continued positive solutions ``zeta_k ~ rho^{|k|}`` for |k| >= 2.

Variation of parameters gives the closed solution formulas.  Writing
``A(s) = integral_0^s t zeta f dt`` and ``O(s) = A(s)/(s zeta(s)^2)``:

    |k| >= 2:  p(rho) = -zeta(rho) integral_rho^{8R} O(s) ds,
    |k| = 1:   p(rho) = +zeta_1(rho) integral_rho^{8R}
                          (1/(s zeta_1^2)) integral_s^{8R} t zeta_1 f dt ds,

the second (outer-decaying) variant existing precisely when

    integral_0^{8R} (1 + t^2) g_{+-1}(t) zeta_1(t) t dt = 0,

the solvability condition enforced here; without it the candidate solution
is singular like 1/rho at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from ._radial import (RadialGrid, cumulative_from_origin, cumulative_to_end,
                      integrate, log_radial_grid)
from ._validation import ComplexArray, as_points
from .errors import SolvabilityError, UnsupportedModeError, ValidationError
from .fields import PolarModeField, field_from_callable

__all__ = [
    "MODE_CAP",
    "RadialModeProfile",
    "ModeRHS",
    "zeta",
    "solve_mode",
    "mode_ode_residual",
    "solve_linearized",
    "first_improvement_rhs",
    "first_improvement_mode",
    "EnvelopeFit",
    "fit_envelope",
]

# Largest |k| the growth-scaled quadratures handle without float trouble.
MODE_CAP = 24


def _u0(rho):
    return 8.0 / (1.0 + rho * rho) ** 2


@dataclass(frozen=True)
class RadialModeProfile:
    """Radial profile ``p_k`` of one angular mode on a log grid."""

    k: int
    grid: RadialGrid
    values: ComplexArray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise ValidationError(
                f"profile shape {vals.shape} does not match grid size {self.grid.size}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("profile values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class ModeRHS:
    """Sampled right-hand side ``g_k`` with an optional decay-exponent tag."""

    k: int
    grid: RadialGrid
    values: ComplexArray
    alpha: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.k, (int, np.integer)):
            raise ValidationError(f"mode index must be an integer, got {self.k!r}")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise ValidationError(
                f"rhs shape {vals.shape} does not match grid size {self.grid.size}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("rhs values must be finite")
        object.__setattr__(self, "values", vals)
        if self.alpha is not None and not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"decay exponent must be positive, got {self.alpha}")

    def envelope_constant(self) -> float:
        """``sup |g_k| (1+rho)^alpha`` when a decay tag is present."""
        if self.alpha is None:
            raise ValidationError("rhs carries no decay tag")
        return float(np.max(np.abs(self.values) * (1.0 + self.grid.rho) ** self.alpha))


def _frobenius_coefficients(k: int, terms: int = 5) -> list[float]:
    """Series ``zeta = rho^k (c_0 + c_1 rho^2 + ...)`` from the indicial recurrence."""
    c = [1.0]
    for m in range(1, terms):
        acc = 0.0
        for j in range(m):
            acc += (-1.0) ** (m - 1 - j) * (m - j) * c[j]
        c.append(-8.0 * acc / (4.0 * m * (k + m)))
    return c


def _zeta_series(k: int, rho, coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Series values and u-derivative (d zeta/du = rho d zeta/d rho)."""
    rho = np.asarray(rho, dtype=float)
    val = np.zeros_like(rho)
    dval = np.zeros_like(rho)
    for m, cm in enumerate(coeffs):
        power = k + 2 * m
        term = cm * rho**power
        val += term
        dval += power * term
    return val, dval


_zeta_cache: dict[tuple[int, int], tuple[np.ndarray, CubicSpline]] = {}


def _zeta_dense(k: int, rho_max: float) -> tuple[np.ndarray, CubicSpline]:
    """Dense table of ``log zeta_k`` on [1e-4, bucketed rho_max], spline in u.

    Returned spline maps u = log rho to log zeta_k (zeta_k stays positive);
    storing the log keeps evaluation stable across the rho^k growth range.
    """
    bucket = max(8, int(math.ceil(math.log2(max(rho_max, 1.0)))))
    key = (k, bucket)
    if key in _zeta_cache:
        return _zeta_cache[key]
    rho_min, rho_top = 1e-4, float(2.0**bucket)
    n = max(8001, int(math.log(rho_top / rho_min) / 2e-3) | 1)
    u = np.linspace(math.log(rho_min), math.log(rho_top), n)
    du = u[1] - u[0]
    coeffs = _frobenius_coefficients(k)
    z0, v0 = _zeta_series(k, rho_min, coeffs)
    z = np.empty(n)
    v = np.empty(n)
    z[0], v[0] = float(z0), float(v0)

    def rhs(ui, zi, vi):
        rho2 = math.exp(2.0 * ui)
        return vi, (k * k - rho2 * 8.0 / (1.0 + rho2) ** 2) * zi

    sub = 2  # RK4 substeps per grid interval
    h = du / sub
    for i in range(n - 1):
        ui, zi, vi = u[i], z[i], v[i]
        for _ in range(sub):
            k1z, k1v = rhs(ui, zi, vi)
            k2z, k2v = rhs(ui + h / 2, zi + h / 2 * k1z, vi + h / 2 * k1v)
            k3z, k3v = rhs(ui + h / 2, zi + h / 2 * k2z, vi + h / 2 * k2v)
            k4z, k4v = rhs(ui + h, zi + h * k3z, vi + h * k3v)
            zi += h / 6 * (k1z + 2 * k2z + 2 * k3z + k4z)
            vi += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            ui += h
        z[i + 1], v[i + 1] = zi, vi
    if np.any(z <= 0.0):
        raise ValidationError(f"homogeneous solution for k={k} lost positivity")
    result = (u, CubicSpline(u, np.log(z)))
    _zeta_cache[key] = result
    return result


def zeta(k: int, rho) -> float | np.ndarray:
    """Positive homogeneous solution of ``L_k``, normalized ``zeta ~ rho^{|k|}`` at 0."""
    if k == 0:
        raise UnsupportedModeError("mode zero has no regular homogeneous solution here")
    kk = abs(int(k))
    if kk > MODE_CAP:
        raise UnsupportedModeError(
            f"|k| = {kk} exceeds the stable quadrature cap {MODE_CAP}")
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0.0) or not np.all(np.isfinite(rho_arr)):
        raise ValidationError("zeta requires strictly positive finite radii")
    if kk == 1:
        out = rho_arr / (1.0 + rho_arr**2)
        return float(out) if out.ndim == 0 else out
    _, logspline = _zeta_dense(kk, float(np.max(rho_arr)))
    out = np.exp(logspline(np.log(rho_arr)))
    return float(out) if out.ndim == 0 else out


def _transform_rhs(rhs: ModeRHS) -> ComplexArray:
    """``f_k = i (1+rho^2) g_k / (4k)`` from equation (*)."""
    return 1j * (1.0 + rhs.grid.rho**2) * rhs.values / (4.0 * rhs.k)


def solve_mode(rhs: ModeRHS, R: float) -> RadialModeProfile:
    """Invert one angular mode with zero boundary value at the grid end (8R).

    The grid must end at 8R.  For |k| = 1 the solvability integral
    ``integral (1+t^2) g zeta_1 t dt`` is checked at relative tolerance 1e-8.
    """
    k = int(rhs.k)
    if k == 0:
        raise UnsupportedModeError("mode zero is not solvable (angular mean must vanish)")
    if abs(k) > MODE_CAP:
        raise UnsupportedModeError(
            f"|k| = {abs(k)} exceeds the stable quadrature cap {MODE_CAP}")
    grid = rhs.grid
    if not np.isclose(grid.rho_max, 8.0 * R, rtol=1e-9):
        raise ValidationError(
            f"grid must extend to 8R = {8.0 * R:.6g}, got {grid.rho_max:.6g}")
    rho = grid.rho
    z = zeta(k, rho)
    f = _transform_rhs(rhs)
    if abs(k) == 1:
        weight = (1.0 + rho**2) * z * rho
        j_tot = complex(integrate(grid, weight * rhs.values))
        j_scale = float(integrate(grid, weight * np.abs(rhs.values)))
        if abs(j_tot) > 1e-8 * max(j_scale, 1e-300):
            raise SolvabilityError(
                f"mode {k} solvability integral = {abs(j_tot):.3e} "
                f"(relative {abs(j_tot) / max(j_scale, 1e-300):.2e}); the "
                "outer-decaying solution requires it to vanish")
        inner = cumulative_to_end(grid, rho * z * f)
        p = z * cumulative_to_end(grid, inner / (rho * z**2))
    else:
        inner = cumulative_from_origin(grid, rho * z * f, head_power=float(abs(k) + 1))
        p = -z * cumulative_to_end(grid, inner / (rho * z**2))
    p[-1] = 0.0  # boundary value, exact
    return RadialModeProfile(k, grid, p)


def mode_ode_residual(profile: RadialModeProfile, rhs: ModeRHS) -> np.ndarray:
    """``|L_k[p] - f_k|`` by fourth-order differences in log-radius.

    The first/last two nodes carry no centered stencil and are reported as 0.
    """
    if profile.grid is not rhs.grid and not np.array_equal(profile.grid.rho, rhs.grid.rho):
        raise ValidationError("profile and rhs live on different grids")
    grid = profile.grid
    p = profile.values
    u = grid.u
    du = u[1] - u[0]
    rho = grid.rho
    d1 = np.zeros_like(p)
    d2 = np.zeros_like(p)
    d1[2:-2] = (p[:-4] - 8 * p[1:-3] + 8 * p[3:-1] - p[4:]) / (12 * du)
    d2[2:-2] = (-p[:-4] + 16 * p[1:-3] - 30 * p[2:-2] + 16 * p[3:-1] - p[4:]) / (12 * du**2)
    # p'' + p'/rho = p_uu / rho^2 in u = log rho
    lhs = d2 / rho**2 - profile.k**2 * p / rho**2 + _u0(rho) * p
    resid = np.abs(lhs - _transform_rhs(rhs))
    resid[:2] = 0.0
    resid[-2:] = 0.0
    return resid


def solve_linearized(g, R: float, *, grid: RadialGrid | None = None,
                     n_theta: int = 256,
                     mode_energy_tol: float = 1e-12) -> tuple[PolarModeField, PolarModeField]:
    """Solve the full linearized problem; returns ``(psi, phi)`` with ``phi = -Delta psi``.

    ``g`` is a callable on Cartesian points or a :class:`PolarModeField`
    sampled on a grid ending at 8R.  The angular mean of ``g`` must vanish
    (relative 1e-8) and only modes carrying a ``mode_energy_tol`` fraction of
    the total mode amplitude are inverted.
    """
    if grid is None:
        grid = log_radial_grid(8.0 * R, n=2400)
    if isinstance(g, PolarModeField):
        gfield = g
        grid = g.grid
    else:
        gfield = field_from_callable(grid, g, n_theta=n_theta)
    if not np.isclose(grid.rho_max, 8.0 * R, rtol=1e-9):
        raise ValidationError(
            f"grid must extend to 8R = {8.0 * R:.6g}, got {grid.rho_max:.6g}")
    amplitudes = {k: float(np.max(np.abs(gfield.radial(k)))) for k in gfield.mode_indices}
    scale = max(amplitudes.values(), default=0.0)
    if scale == 0.0:
        return PolarModeField(grid, {}), PolarModeField(grid, {})
    if amplitudes.get(0, 0.0) > 1e-8 * scale:
        raise SolvabilityError(
            f"angular mean of g is nonzero (relative {amplitudes[0] / scale:.2e}); "
            "mode zero is annihilated by the transport operator")
    psi_modes: dict[int, ComplexArray] = {}
    phi_modes: dict[int, ComplexArray] = {}
    for k in gfield.mode_indices:
        if k == 0 or amplitudes[k] <= mode_energy_tol * scale:
            continue
        if k > MODE_CAP:
            raise UnsupportedModeError(
                f"significant angular mode {k} exceeds the stable cap {MODE_CAP}")
        rhs = ModeRHS(k, grid, gfield.radial(k))
        p = solve_mode(rhs, R).values
        psi_modes[k] = p
        phi_modes[k] = _u0(grid.rho) * p - _transform_rhs(rhs)
    return PolarModeField(grid, psi_modes), PolarModeField(grid, phi_modes)


def first_improvement_rhs(k: int, harmonic_coeffs: tuple[float, float]) -> Callable:
    """The corrector right-hand side built from a degree-``k`` harmonic polynomial.

    With ``q_k = rho^k (alpha cos k theta + beta sin k theta)`` the field is

        g^k(y) = (1/k!) * (4 U0 / (1+rho^2)) * d q_k / d theta,

    carrying angular modes +-k only and decaying like ``(1+rho)^{k-6}``.
    """
    if k not in (2, 3, 4):
        raise UnsupportedModeError(f"first-improvement mode must be 2, 3, or 4, got {k}")
    alpha, beta = float(harmonic_coeffs[0]), float(harmonic_coeffs[1])

    def g(points):
        pts = as_points(points, name="points")
        rho = np.hypot(pts[..., 0], pts[..., 1])
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        radial = (4.0 * k / math.factorial(k)) * _u0(rho) * rho**k / (1.0 + rho**2)
        return radial * (beta * np.cos(k * theta) - alpha * np.sin(k * theta))

    return g


def first_improvement_mode(k: int, harmonic_coeffs: tuple[float, float],
                           grid: RadialGrid) -> ModeRHS:
    """Modal form of :func:`first_improvement_rhs`: ``c_k = radial * (beta + i alpha)/2``."""
    if k not in (2, 3, 4):
        raise UnsupportedModeError(f"first-improvement mode must be 2, 3, or 4, got {k}")
    alpha, beta = float(harmonic_coeffs[0]), float(harmonic_coeffs[1])
    rho = grid.rho
    radial = (4.0 * k / math.factorial(k)) * _u0(rho) * rho**k / (1.0 + rho**2)
    return ModeRHS(k, grid, radial * (beta + 1j * alpha) / 2.0, alpha=float(6 - k))


@dataclass(frozen=True)
class EnvelopeFit:
    """Result of fitting ``|p|`` against an envelope ``e(rho) = (1+rho)^power``.

    ``constant`` is the least-squares amplitude over the fit window; for the
    logarithmic branch it is the coefficient of ``log(16R/(1+rho))`` in
    ``|p|(1+rho)^{-power}`` and ``offset`` is the fitted constant part, so that
    ``offset / constant`` measures how much non-logarithmic signal the window
    contains.  ``sup_ratio`` is the global ``sup |p|/e`` (log factor included
    when applicable), which bounds the solution by ``sup_ratio * e`` outright.
    ``residual_rel`` is the max misfit on the window relative to the max of
    ``|p|`` there; small values certify that the envelope shape matches.
    """

    constant: float
    offset: float
    sup_ratio: float
    residual_rel: float
    power: float
    log_branch: bool
    window: tuple[float, float]


def fit_envelope(profile: RadialModeProfile, power: float, R: float,
                 *, log_branch: bool = False,
                 window: tuple[float, float] = (20.0, 100.0)) -> EnvelopeFit:
    """Fit the envelope constant for ``|p| <= C (1+rho)^power [log(16R/(1+rho))]``.

    The fit uses a fixed radial window so constants are comparable across
    different outer radii: with identical windows the O(1/rho) corrections to
    the far-field amplitude enter both fits identically and cancel in any
    stability comparison.  Plain branches use proportional least squares
    ``|p| ~ C e``; the log branch regresses ``|p|(1+rho)^{-power}`` affinely on
    ``log(16R/(1+rho))`` so the slope isolates the logarithmic amplitude from
    the O(1) remainder (which otherwise decays only like 1/log R).
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0.0 < lo < hi:
        raise ValidationError(f"fit window must satisfy 0 < lo < hi, got {window}")
    if profile.grid.rho_max < 2.0 * hi:
        raise ValidationError(
            f"outer radius {profile.grid.rho_max:g} too small for fit window "
            f"(need at least {2.0 * hi:g})")
    rho = profile.grid.rho
    sel = (rho >= lo) & (rho <= hi)
    base = (1.0 + rho[sel]) ** power
    absp = np.abs(profile.values[sel])
    logfac = np.log(16.0 * R / (1.0 + rho))
    if log_branch:
        # For |k| = 1 the logarithmic amplitude rides on the exact slow
        # homogeneous solution rho/(1+rho^2); normalizing by it makes the model
        # affine in the log with only radius-independent remainders, so the
        # fitted slope is invariant under changes of the outer radius.
        if abs(profile.k) == 1:
            norm = rho[sel] / (1.0 + rho[sel] ** 2)
        else:
            norm = base
        y = absp / norm
        t = logfac[sel]
        design = np.column_stack([t, np.ones_like(t)])
        (constant, offset), *_ = np.linalg.lstsq(design, y, rcond=None)
        fitted = design @ (constant, offset)
        env_all = (1.0 + rho) ** power * logfac
    else:
        constant = float(absp @ base / (base @ base))
        offset = 0.0
        fitted = constant * base
        y = absp
        env_all = (1.0 + rho) ** power
    residual_rel = float(np.max(np.abs(y - fitted)) / np.max(np.abs(y)))
    interior = rho <= 4.0 * R
    sup_ratio = float(np.max(np.abs(profile.values[interior]) / env_all[interior]))
    return EnvelopeFit(constant=float(constant), offset=float(offset),
                       sup_ratio=sup_ratio, residual_rel=residual_rel,
                       power=float(power), log_branch=bool(log_branch),
                       window=(lo, hi))
