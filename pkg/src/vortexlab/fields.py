"""Field containers shared across the library.

Two representations cover every need here:

* :class:`ScalarField2D` -- values on a uniform rectangular lattice with an
  interior mask, used by the grid Poisson/Euler machinery.  Snapshots export
  to CSV ``x,y,value`` rows and to a flat binary format with a small header
  (dimensions, origin, spacing, time) for exact round-trips.
* :class:`PolarModeField` -- a real field on the plane stored as angular
  Fourier modes ``f(rho e^{i theta}) = c_0(rho) + 2 Re sum_{k>0} c_k(rho)
  e^{ik theta}`` with radial profiles sampled on a log grid.  All the
  rotation-symmetric analysis (Newtonian potential, kernel moments,
  quadratic forms) acts mode by mode on this container.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from ._radial import RadialGrid, integrate
from ._validation import ComplexArray, FloatArray, as_points
from .errors import ValidationError

__all__ = [
    "ScalarField2D",
    "write_field_csv",
    "write_field_binary",
    "read_field_binary",
    "bilinear_evaluator",
    "PolarModeField",
    "field_from_callable",
]

_MAGIC = b"VLF1"


@dataclass(frozen=True)
class ScalarField2D:
    """Scalar samples on a uniform lattice with an interior mask."""

    x0: float
    y0: float
    h: float
    values: FloatArray
    mask: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if vals.ndim != 2 or vals.shape != mask.shape:
            raise ValidationError(
                f"values shape {vals.shape} and mask shape {mask.shape} must be equal 2D")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("field values must be finite")
        if not (np.isfinite(self.h) and self.h > 0.0):
            raise ValidationError(f"spacing must be positive, got {self.h}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mask", mask)

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def xs(self) -> FloatArray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self) -> FloatArray:
        return self.y0 + self.h * np.arange(self.ny)

    def with_values(self, values, time: float | None = None) -> "ScalarField2D":
        return ScalarField2D(self.x0, self.y0, self.h, values, self.mask,
                             self.time if time is None else time)

    def integral(self) -> float:
        """Lattice quadrature of the field over the mask."""
        return float(self.values[self.mask].sum() * self.h**2)

    def max_abs(self) -> float:
        masked = self.values[self.mask]
        return float(np.max(np.abs(masked))) if masked.size else 0.0


def write_field_csv(field2d: ScalarField2D, path) -> None:
    """Write ``x,y,value`` rows for every lattice node (row-major)."""
    xs = field2d.xs
    ys = field2d.ys
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for j in range(field2d.ny):
            for i in range(field2d.nx):
                fh.write(f"{float(xs[i])!r},{float(ys[j])!r},"
                         f"{float(field2d.values[j, i])!r}\n")


def write_field_binary(field2d: ScalarField2D, path) -> None:
    """Flat binary dump: magic, nx, ny, x0, y0, h, time, mask bytes, values."""
    header = _MAGIC + struct.pack(
        "<ii4d", field2d.nx, field2d.ny, field2d.x0, field2d.y0,
        field2d.h, field2d.time)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field2d.mask, dtype=np.uint8).tobytes())
        fh.write(np.ascontiguousarray(field2d.values, dtype="<f8").tobytes())


def read_field_binary(path) -> ScalarField2D:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValidationError("not a field binary (bad magic)")
    nx, ny, x0, y0, h, time = struct.unpack_from("<ii4d", blob, 4)
    offset = 4 + struct.calcsize("<ii4d")
    count = nx * ny
    mask = np.frombuffer(blob, dtype=np.uint8, count=count, offset=offset)
    offset += count
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
    return ScalarField2D(x0, y0, h, values.reshape(ny, nx).copy(),
                         mask.reshape(ny, nx).astype(bool), time)


def bilinear_evaluator(field2d: ScalarField2D) -> Callable:
    """Wrap a lattice field as a callable ``(points, t) -> values`` evaluator.

    Bilinear interpolation inside the lattice, zero outside; the time argument
    is accepted (and ignored) so the result plugs into the transport solvers.
    """
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(
        (field2d.ys, field2d.xs), np.where(field2d.mask, field2d.values, 0.0),
        method="linear", bounds_error=False, fill_value=0.0)

    def evaluate(points, t=None):
        pts = as_points(points, name="points")
        vals = interp(pts[..., ::-1])
        return float(vals) if vals.ndim == 0 else vals

    return evaluate


@dataclass(frozen=True)
class PolarModeField:
    """Real plane field stored as non-negative angular Fourier modes.

    ``modes[k]`` holds the complex radial profile ``c_k`` on ``grid``; the
    negative modes are implied by conjugate symmetry.  The zero mode must be
    real up to roundoff.
    """

    grid: RadialGrid
    modes: Mapping[int, ComplexArray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean: dict[int, ComplexArray] = {}
        scale = 0.0
        for k, profile in self.modes.items():
            if not isinstance(k, (int, np.integer)) or k < 0:
                raise ValidationError(f"mode indices must be integers >= 0, got {k}")
            arr = np.asarray(profile, dtype=complex)
            if arr.shape != (self.grid.size,):
                raise ValidationError(
                    f"mode {k} profile shape {arr.shape} does not match grid size {self.grid.size}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"mode {k} profile must be finite")
            clean[int(k)] = arr
            scale = max(scale, float(np.max(np.abs(arr))) if arr.size else 0.0)
        if 0 in clean:
            imag = float(np.max(np.abs(clean[0].imag))) if clean[0].size else 0.0
            if imag > 1e-8 * max(scale, 1e-300):
                raise ValidationError("zero mode of a real field must be real")
            clean[0] = clean[0].real + 0.0j
        object.__setattr__(self, "modes", clean)
        object.__setattr__(self, "_splines", {})

    # -- construction helpers -------------------------------------------------
    def _spline(self, k: int):
        cache = self._splines  # type: ignore[attr-defined]
        if k not in cache:
            profile = self.modes[k]
            cache[k] = (CubicSpline(self.grid.u, profile.real),
                        CubicSpline(self.grid.u, profile.imag))
        return cache[k]

    @property
    def mode_indices(self) -> list[int]:
        return sorted(self.modes)

    def radial(self, k: int) -> ComplexArray:
        """Radial profile of mode ``k`` (zeros if the mode is absent)."""
        if k in self.modes:
            return self.modes[k].copy()
        return np.zeros(self.grid.size, dtype=complex)

    # -- evaluation ------------------------------------------------------------
    def value(self, points) -> FloatArray | float:
        """Synthesize the field at Cartesian points (radius clamped to the grid)."""
        pts = as_points(points, name="points")
        rho = np.hypot(pts[..., 0], pts[..., 1])
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        u = np.log(np.clip(rho, self.grid.rho_min, self.grid.rho_max))
        total = np.zeros(np.shape(rho))
        for k in self.mode_indices:
            sre, sim = self._spline(k)
            ck = sre(u) + 1j * sim(u)
            if k == 0:
                total = total + ck.real
            else:
                total = total + 2.0 * (ck * np.exp(1j * k * theta)).real
        return float(total) if total.ndim == 0 else total

    # -- integrals ---------------------------------------------------------------
    def _require_same_grid(self, other: "PolarModeField") -> None:
        if self.grid.size != other.grid.size or not np.allclose(
                self.grid.rho, other.grid.rho, rtol=1e-12, atol=0.0):
            raise ValidationError("fields live on different radial grids")

    def mass(self) -> float:
        """``integral f dy`` (only the zero mode contributes)."""
        if 0 not in self.modes:
            return 0.0
        return float(2.0 * np.pi * integrate(self.grid, self.modes[0].real * self.grid.rho))

    def inner(self, other: "PolarModeField", weight: FloatArray | None = None) -> float:
        """``integral f g w(rho) dy`` for real fields ``f, g`` and radial weight ``w``."""
        self._require_same_grid(other)
        w = np.ones(self.grid.size) if weight is None else np.asarray(weight, dtype=float)
        total = 0.0
        for k in sorted(set(self.modes) | set(other.modes)):
            a = self.radial(k)
            b = other.radial(k)
            term = integrate(self.grid, (a * np.conj(b)).real * w * self.grid.rho)
            total += term if k == 0 else 2.0 * term
        return float(2.0 * np.pi * total)

    def l2_norm_sq(self) -> float:
        return self.inner(self)

    def weighted_norm_sq(self) -> float:
        """``integral f^2 U0^{-1} dy`` with ``U0 = 8/(1+rho^2)^2``."""
        w = (1.0 + self.grid.rho**2) ** 2 / 8.0
        return self.inner(self, weight=w)

    # -- linear structure ----------------------------------------------------------
    def _combine(self, other: "PolarModeField", sign: float) -> "PolarModeField":
        self._require_same_grid(other)
        out: dict[int, ComplexArray] = {}
        for k in sorted(set(self.modes) | set(other.modes)):
            out[k] = self.radial(k) + sign * other.radial(k)
        return PolarModeField(self.grid, out)

    def __add__(self, other: "PolarModeField") -> "PolarModeField":
        return self._combine(other, 1.0)

    def __sub__(self, other: "PolarModeField") -> "PolarModeField":
        return self._combine(other, -1.0)

    def __mul__(self, scalar) -> "PolarModeField":
        c = float(scalar)
        return PolarModeField(self.grid, {k: c * v for k, v in self.modes.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PolarModeField":
        return self * -1.0


def field_from_callable(grid: RadialGrid, fn: Callable, *, n_theta: int = 256,
                        max_mode: int | None = None,
                        drop_tol: float = 1e-14) -> PolarModeField:
    """Sample ``fn`` on a polar mesh and Fourier-analyze the angle.

    ``fn`` receives Cartesian points of shape (n_rho, n_theta, 2) and must
    return real values.  Modes with relative amplitude below ``drop_tol`` are
    dropped; ``max_mode`` truncates the expansion.
    """
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    pts = grid.rho[:, None, None] * np.stack(
        [np.cos(theta), np.sin(theta)], axis=-1)[None, :, :]
    samples = np.asarray(fn(pts), dtype=float)
    if samples.shape != (grid.size, n_theta):
        raise ValidationError(
            f"callable returned shape {samples.shape}, expected {(grid.size, n_theta)}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("callable returned non-finite samples")
    coeffs = np.fft.fft(samples, axis=1) / n_theta
    kmax = n_theta // 2 - 1 if max_mode is None else min(max_mode, n_theta // 2 - 1)
    scale = float(np.max(np.abs(coeffs))) or 1.0
    modes: dict[int, ComplexArray] = {}
    for k in range(kmax + 1):
        profile = coeffs[:, k]
        if k == 0:
            profile = profile.real + 0.0j
        if k == 0 or np.max(np.abs(profile)) > drop_tol * scale:
            modes[k] = profile
    return PolarModeField(grid, modes)
