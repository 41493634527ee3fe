"""Stereographic utilities, Newtonian potential, kernel moments, and the
quadratic-form gap.

The plane is identified with the unit sphere minus its north pole through

    lift(y) = (2 y_1, 2 y_2, |y|^2 - 1) / (1 + |y|^2),
    project(z) = (z_1, z_2) / (1 - z_3),

a conformal pair whose area element satisfies ``d sigma = (U0/2) dy`` with
``U0 = 8/(1+|y|^2)^2``.  Consequently, for a plane field ``phi`` and its
weighted pullback ``phi_tilde = (phi / U0) o project``,

    integral_{R^2} phi^2 U0^{-1} dy = 2 * integral_{S^2} phi_tilde^2 d sigma,

and plane/sphere Laplacians relate by ``Delta_plane h = (U0/2)
Delta_sphere h_tilde``.  (The factor 2 is forced by ``U0``'s mass:
``integral U0 dy = 8 pi = 2 * area(S^2)``.)

The quadratic form of interest is ``Q(phi) = integral phi g dy`` with
``g = U0^{-1} phi - N(phi)`` and ``N`` the Newtonian potential normalized by
``-Delta N(phi) = phi``.  On pullbacks of degree-l spherical harmonics the
conformal correspondence gives the exact ratio

    Q(phi) / integral phi^2 U0^{-1} dy = 1 - 2/lambda_l,   lambda_l = l(l+1),

which serves as the oracle for the gap machinery.  For fields orthogonal to
the kernels Z_0..Z_3 the ratio stays positive, degrading at worst like
``1/log R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import eval_legendre, roots_legendre

from ._radial import RadialGrid, cumulative_from_origin, cumulative_to_end, integrate
from ._validation import FloatArray, as_float_array, as_points
from .errors import MassBalanceError, PoleError, SolverError, ValidationError
from .fields import PolarModeField

__all__ = [
    "stereo_lift",
    "stereo_project",
    "sphere_quadrature",
    "newtonian",
    "KernelSet",
    "project_orthogonal",
    "GapResult",
    "quadratic_form_gap",
    "harmonic_pullback",
    "random_decaying_field",
]


def stereo_lift(y) -> FloatArray:
    """Map plane points onto the unit sphere (south pole is the origin's image)."""
    pts = as_points(y, name="y")
    rho2 = np.sum(pts * pts, axis=-1)
    denom = 1.0 + rho2
    return np.stack(
        [2.0 * pts[..., 0] / denom, 2.0 * pts[..., 1] / denom, (rho2 - 1.0) / denom],
        axis=-1)


def stereo_project(z) -> FloatArray:
    """Inverse of :func:`stereo_lift`; rejects the north pole."""
    arr = as_float_array(z, name="z")
    if arr.shape[-1] != 3:
        raise ValidationError(f"sphere points must have shape (..., 3), got {arr.shape}")
    norms = np.sqrt(np.sum(arr * arr, axis=-1))
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise ValidationError("sphere points must lie on the unit sphere")
    denom = 1.0 - arr[..., 2]
    if np.any(denom < 1e-12):
        raise PoleError("stereographic projection is singular at the north pole")
    return arr[..., :2] / denom[..., None]


def sphere_quadrature(n_polar: int = 160, n_azimuth: int = 320) -> tuple[FloatArray, FloatArray]:
    """Gauss-Legendre x uniform-azimuth quadrature on the unit sphere.

    Returns ``(points, weights)`` with ``sum w_i f(p_i) ~ integral_{S^2} f d sigma``;
    spectrally accurate for smooth integrands.
    """
    t, w = roots_legendre(int(n_polar))
    phi = 2.0 * np.pi * np.arange(int(n_azimuth)) / int(n_azimuth)
    sin_theta = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    points = np.stack(
        [np.outer(sin_theta, np.cos(phi)),
         np.outer(sin_theta, np.sin(phi)),
         np.outer(t, np.ones_like(phi))], axis=-1).reshape(-1, 3)
    weights = np.outer(w, np.full(phi.shape, 2.0 * np.pi / len(phi))).ravel()
    return points, weights


def newtonian(phi: PolarModeField, *, mass_tol: float = 1e-8) -> PolarModeField:
    """Logarithmic potential ``psi`` with ``-Delta psi = phi``, decaying at infinity.

    Mode zero integrates the enclosed mass, ``psi_0(rho) = integral_rho^inf
    m(r)/r dr`` with ``m(r) = integral_0^r c_0 s ds``; modes ``k >= 1`` use the
    explicit kernel ``psi_k = (rho^{-k} A_k + rho^k B_k) / (2k)``.  The decay
    normalization requires total mass zero.
    """
    grid = phi.grid
    rho = grid.rho
    modes_out: dict[int, np.ndarray] = {}
    for k in phi.mode_indices:
        ck = phi.modes[k]
        if k == 0:
            mass = 2.0 * np.pi * float(integrate(grid, ck.real * rho))
            scale = 2.0 * np.pi * float(integrate(grid, np.abs(ck.real) * rho))
            if abs(mass) > mass_tol * max(scale, 1e-300):
                raise MassBalanceError(
                    f"field has nonzero mass {mass:.3e} (relative {abs(mass) / max(scale, 1e-300):.2e}); "
                    "the decaying potential requires zero total mass")
            enclosed = cumulative_from_origin(grid, ck.real * rho, head_power=1.0)
            enclosed = enclosed - mass / (2.0 * np.pi)  # exact zero tail within quadrature
            modes_out[0] = cumulative_to_end(grid, enclosed / rho).astype(complex)
        else:
            inner_int = cumulative_from_origin(grid, rho ** (k + 1) * ck,
                                               head_power=float(k + 1))
            outer_int = cumulative_to_end(grid, rho ** (1 - k) * ck)
            modes_out[k] = (rho ** (-k) * inner_int + rho**k * outer_int) / (2.0 * k)
    return PolarModeField(grid, modes_out)


def _u0(rho: FloatArray) -> FloatArray:
    return 8.0 / (1.0 + rho * rho) ** 2


def _u0_prime(rho: FloatArray) -> FloatArray:
    return -32.0 * rho / (1.0 + rho * rho) ** 3


@dataclass(frozen=True)
class KernelSet:
    """The four moment kernels ``Z_l`` and their companions ``script Z_{1l}``.

    ``Z_0 = 1``; ``Z_1, Z_2 = y_1, y_2`` cut off beyond ``5R``;
    ``Z_3 = (1-rho^2)/(1+rho^2) + b3(rho)`` with an optional radial
    perturbation bounded by ``R^{-nu}``.  The companions are ``U0``, the two
    components of ``grad U0``, and ``2 U0 + grad U0 . y``.
    """

    R: float
    nu: float = 0.5
    b3: Callable[[FloatArray], FloatArray] | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.R) and self.R > 1.0):
            raise ValidationError(f"cutoff radius must exceed 1, got {self.R}")
        if not (np.isfinite(self.nu) and self.nu > 0.0):
            raise ValidationError(f"perturbation exponent must be positive, got {self.nu}")
        if self.b3 is not None:
            probe = np.linspace(0.0, 10.0 * self.R, 4001)
            vals = np.asarray(self.b3(probe), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValidationError("b3 must be finite")
            if np.max(np.abs(vals)) > self.R ** (-self.nu) * (1.0 + 1e-9):
                raise ValidationError(
                    f"sup |b3| = {np.max(np.abs(vals)):.3e} exceeds the bound "
                    f"R^(-nu) = {self.R ** (-self.nu):.3e}")

    def _b3_radial(self, rho: FloatArray) -> FloatArray:
        if self.b3 is None:
            return np.zeros_like(rho)
        return np.asarray(self.b3(rho), dtype=float)

    def Z(self, ell: int, points) -> FloatArray:
        """Evaluate ``Z_ell`` at Cartesian points."""
        pts = as_points(points, name="points")
        rho = np.hypot(pts[..., 0], pts[..., 1])
        if ell == 0:
            return np.ones_like(rho)
        if ell in (1, 2):
            return pts[..., ell - 1] * (rho <= 5.0 * self.R)
        if ell == 3:
            return (1.0 - rho**2) / (1.0 + rho**2) + self._b3_radial(rho)
        raise ValidationError(f"kernel index must be 0..3, got {ell}")

    def script_Z(self, ell: int, points) -> FloatArray:
        """Evaluate the companion kernel at Cartesian points."""
        pts = as_points(points, name="points")
        rho = np.hypot(pts[..., 0], pts[..., 1])
        if ell == 0:
            return _u0(rho)
        if ell in (1, 2):
            with np.errstate(invalid="ignore", divide="ignore"):
                direction = np.where(rho[..., None] > 0.0, pts / np.maximum(rho, 1e-300)[..., None], 0.0)
            return _u0_prime(rho) * direction[..., ell - 1]
        if ell == 3:
            return 16.0 * (1.0 - rho**2) / (1.0 + rho**2) ** 3
        raise ValidationError(f"kernel index must be 0..3, got {ell}")

    def script_field(self, ell: int, grid: RadialGrid) -> PolarModeField:
        """``script Z_{1 ell}`` as a modal field on ``grid``."""
        rho = grid.rho
        if ell == 0:
            return PolarModeField(grid, {0: _u0(rho).astype(complex)})
        if ell == 1:
            return PolarModeField(grid, {1: 0.5 * _u0_prime(rho).astype(complex)})
        if ell == 2:
            return PolarModeField(grid, {1: -0.5j * _u0_prime(rho)})
        if ell == 3:
            return PolarModeField(grid, {0: (16.0 * (1.0 - rho**2) / (1.0 + rho**2) ** 3).astype(complex)})
        raise ValidationError(f"kernel index must be 0..3, got {ell}")

    def moments(self, phi: PolarModeField, *, absolute: bool = False) -> FloatArray:
        """The four moments ``integral phi Z_ell dy`` (modal quadrature).

        With ``absolute=True`` returns the integrals of the absolute
        integrands, used to scale orthogonality tolerances.
        """
        grid = phi.grid
        rho = grid.rho
        cut = rho <= 5.0 * self.R
        c0 = phi.radial(0).real
        c1 = phi.radial(1)
        z3 = (1.0 - rho**2) / (1.0 + rho**2) + self._b3_radial(rho)
        integrands = [
            c0 * rho,
            c1.real * rho**2 * cut,
            -c1.imag * rho**2 * cut,
            c0 * z3 * rho,
        ]
        out = np.empty(4)
        for ell, integrand in enumerate(integrands):
            vals = np.abs(integrand) if absolute else integrand
            out[ell] = 2.0 * np.pi * float(integrate(grid, vals))
        return out


def project_orthogonal(phi: PolarModeField, kernels: KernelSet) -> PolarModeField:
    """Subtract the ``script Z_{1l}`` combination that kills all four moments."""
    fields = [kernels.script_field(ell, phi.grid) for ell in range(4)]
    matrix = np.column_stack([kernels.moments(f) for f in fields])
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > 1e8:
        raise SolverError(
            f"moment matrix is ill-conditioned (cond = {cond:.2e}); "
            "the cutoff radius is too small for the kernel set")
    coeffs = np.linalg.solve(matrix, kernels.moments(phi))
    out = phi
    for c, f in zip(coeffs, fields):
        out = out - float(c) * f
    return out


@dataclass(frozen=True)
class GapResult:
    """Value and normalizations of the quadratic form ``integral phi g dy``."""

    value: float
    weighted_norm_sq: float
    ratio: float
    lower_bound_ratio: float


def quadratic_form_gap(phi: PolarModeField, R: float, *,
                       kernels: KernelSet | None = None,
                       tol: float = 1e-6) -> GapResult:
    """Evaluate ``integral phi g dy`` with ``g = U0^{-1} phi - newtonian(phi)``.

    Requires the four kernel moments of ``phi`` to vanish within ``tol``
    (relative to the absolute-integrand scale).  Returns the form value, the
    weighted norm ``integral phi^2 U0^{-1}``, their ratio, and the ratio
    amplified by ``|log R|`` (the certified lower-bound normalization).
    """
    ks = KernelSet(R) if kernels is None else kernels
    norm = phi.weighted_norm_sq()
    if norm <= 1e-300:
        return GapResult(0.0, 0.0, 0.0, 0.0)
    moments = ks.moments(phi)
    scales = ks.moments(phi, absolute=True)
    for ell in range(4):
        if abs(moments[ell]) > tol * max(scales[ell], 1e-300):
            raise ValidationError(
                f"kernel moment {ell} = {moments[ell]:.3e} violates orthogonality "
                f"(relative {abs(moments[ell]) / max(scales[ell], 1e-300):.2e} > {tol:.1e})")
    psi = newtonian(phi, mass_tol=tol)
    value = norm - phi.inner(psi)
    return GapResult(value, norm, value / norm, value * abs(np.log(R)) / norm)


def harmonic_pullback(grid: RadialGrid, ell: int, kind: str = "sectoral",
                      *, flavor: str = "cos") -> PolarModeField:
    """``phi = U0 * (Y o lift)`` for a degree-``ell`` spherical harmonic ``Y``.

    ``kind='sectoral'`` uses ``Re/Im (z_1 + i z_2)^ell`` (angular mode
    ``ell``); ``kind='zonal'`` uses the Legendre polynomial ``P_ell(z_3)``
    (angular mode 0).  These satisfy all four kernel orthogonality conditions
    for ``ell >= 2``.
    """
    rho = grid.rho
    u0 = _u0(rho)
    if ell < 0:
        raise ValidationError(f"harmonic degree must be >= 0, got {ell}")
    if kind == "sectoral":
        radial = u0 * (2.0 * rho / (1.0 + rho**2)) ** ell
        if flavor == "cos":
            return PolarModeField(grid, {ell: 0.5 * radial.astype(complex)})
        if flavor == "sin":
            return PolarModeField(grid, {ell: -0.5j * radial})
        raise ValidationError(f"flavor must be 'cos' or 'sin', got {flavor!r}")
    if kind == "zonal":
        t = (rho**2 - 1.0) / (rho**2 + 1.0)
        return PolarModeField(grid, {0: (u0 * eval_legendre(ell, t)).astype(complex)})
    raise ValidationError(f"kind must be 'sectoral' or 'zonal', got {kind!r}")


def random_decaying_field(grid: RadialGrid, rng: np.random.Generator,
                          *, max_mode: int = 6) -> PolarModeField:
    """A random smooth field decaying like ``(1+rho)^{-4}`` (not yet orthogonal)."""
    rho = grid.rho
    modes: dict[int, np.ndarray] = {}
    for k in range(max_mode + 1):
        width = rng.uniform(0.5, 2.0)
        a = rng.normal()
        b = 0.0 if k == 0 else rng.normal()
        scaled = rho / width
        profile = (a + 1j * b) * scaled**k / (1.0 + scaled**2) ** ((k + 4) / 2.0)
        modes[k] = profile
    return PolarModeField(grid, modes)
