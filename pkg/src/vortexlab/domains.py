"""Green functions, Robin functions, and the vortex interaction energy.

Normalization used throughout the package: the Green function of a bounded,
simply connected plane domain satisfies

    -Delta_x G(x, xi) = 8 pi delta_xi,   G = 0 on the boundary,

and splits as ``G = Gamma(x - xi) - H(x, xi)`` where ``Gamma(z) = 4 log(1/|z|)``
is the fundamental solution and ``H(., xi)`` is harmonic with boundary trace
``Gamma(x - xi)``. The Robin function is the diagonal ``H(xi, xi)``.

The interaction energy of point vortices with strengths ``kappa_j`` at
positions ``xi_j`` is

    K = -(1/2) sum_i kappa_i^2 H(xi_i, xi_i)
        + (1/2) sum_{i != j} kappa_i kappa_j G(xi_i, xi_j),

and vortex velocities use the perp convention ``(a, b)^perp = (b, -a)``,
i.e. ``grad^perp f = (d2 f, -d1 f)``.

Two domain models are provided:

* :class:`DiskDomain` -- a disk of radius ``a`` centered at the origin with
  everything in closed form via the image point ``xi* = a^2 xi / |xi|^2``:
  ``G = 4 log(|x - xi*| |xi| / (a |x - xi|))``.
* :class:`GridDomain` -- a rectangle with a "square" or "disk" mask where
  ``H(., xi)`` solves a five-point discrete Laplace problem with boundary
  data ``Gamma(x - xi)``.  For the disk mask the stencil arms are shortened
  to the exact circle (Shortley-Weller), which keeps the solve second-order
  accurate despite the curved boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from ._validation import FloatArray, as_float_array, as_point, as_points
from .errors import (
    CollisionError,
    DomainError,
    SingularEvaluationError,
    SolverError,
    ValidationError,
)

__all__ = [
    "COLLISION_FACTOR",
    "BOUNDARY_FACTOR",
    "gamma_fundamental",
    "grad_gamma_fundamental",
    "VortexConfiguration",
    "DiskDomain",
    "GridDomain",
    "green",
    "regular_part",
    "grad_x_green",
    "robin",
    "grad_robin",
    "kirchhoff_routh",
    "grad_perp_K",
    "perp",
]

#: Configurations with min pairwise distance below this fraction of the domain
#: diameter are rejected (the interaction energy blows up logarithmically).
COLLISION_FACTOR = 1e-6

#: Vortices closer to the boundary than this fraction of the domain diameter
#: trip the boundary guard (the Robin function blows up there).
BOUNDARY_FACTOR = 1e-3

_SINGULAR_FACTOR = 1e-14


def perp(v: FloatArray) -> FloatArray:
    """``(a, b) -> (b, -a)`` applied along the last axis."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    out[..., 0] = v[..., 1]
    out[..., 1] = -v[..., 0]
    return out


def gamma_fundamental(x) -> FloatArray | float:
    """Fundamental solution ``Gamma(x) = 4 log(1/|x|)`` (so -Delta Gamma = 8 pi delta)."""
    pts = as_points(x, name="x")
    r = np.hypot(pts[..., 0], pts[..., 1])
    if np.any(r == 0.0):
        raise SingularEvaluationError("fundamental solution evaluated at its singularity")
    values = -4.0 * np.log(r)
    return float(values) if values.ndim == 0 else values


def grad_gamma_fundamental(x) -> FloatArray:
    """Gradient ``-4 x / |x|^2`` of the fundamental solution."""
    pts = as_points(x, name="x")
    r2 = np.sum(pts * pts, axis=-1, keepdims=True)
    if np.any(r2 == 0.0):
        raise SingularEvaluationError("fundamental-solution gradient evaluated at its singularity")
    return -4.0 * pts / r2


@dataclass(frozen=True)
class VortexConfiguration:
    """Positions and strengths of ``N`` point vortices.

    Positions must be pairwise distinct; interiority is validated against a
    specific domain at the point of use.
    """

    positions: FloatArray
    strengths: FloatArray

    def __post_init__(self) -> None:
        pos = as_points(self.positions, name="positions")
        if pos.ndim == 1:
            pos = pos[None, :]
        if pos.ndim != 2:
            raise ValidationError(f"positions must be (N, 2), got shape {pos.shape}")
        kap = as_float_array(self.strengths, name="strengths")
        kap = np.atleast_1d(kap)
        if kap.ndim != 1 or kap.shape[0] != pos.shape[0]:
            raise ValidationError(
                f"strengths shape {kap.shape} does not match {pos.shape[0]} positions")
        if pos.shape[0] < 1:
            raise ValidationError("need at least one vortex")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "strengths", kap)
        if self.count > 1 and self.min_pairwise_distance() == 0.0:
            raise ValidationError("vortex positions must be pairwise distinct")

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def min_pairwise_distance(self) -> float:
        """Minimum pairwise distance; ``inf`` for a single vortex."""
        if self.count < 2:
            return float("inf")
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        iu = np.triu_indices(self.count, k=1)
        return float(dist[iu].min())

    def with_positions(self, positions) -> "VortexConfiguration":
        return VortexConfiguration(positions=positions, strengths=self.strengths)


@dataclass(frozen=True)
class DiskDomain:
    """Disk of radius ``radius`` centered at the origin, everything closed-form."""

    radius: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.radius) and self.radius > 0.0):
            raise ValidationError(f"disk radius must be positive, got {self.radius}")

    @property
    def kind(self) -> str:
        return "disk-analytic"

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x) -> np.ndarray | bool:
        pts = as_points(x, name="x")
        inside = np.hypot(pts[..., 0], pts[..., 1]) < self.radius
        return bool(inside) if inside.ndim == 0 else inside

    def boundary_distance(self, x) -> FloatArray | float:
        pts = as_points(x, name="x")
        d = self.radius - np.hypot(pts[..., 0], pts[..., 1])
        return float(d) if d.ndim == 0 else d

    def require_interior(self, x, *, name: str = "point") -> FloatArray:
        pts = as_points(x, name=name)
        if not np.all(self.contains(pts)):
            raise DomainError(f"{name} lies outside the open disk of radius {self.radius}")
        return pts

    # -- closed forms -----------------------------------------------------

    def _image(self, xi: FloatArray) -> FloatArray:
        n2 = float(xi @ xi)
        return self.radius**2 * xi / n2

    def regular_part(self, x, xi) -> FloatArray | float:
        """``H(x, xi)``, harmonic in ``x`` with boundary trace ``Gamma(x - xi)``."""
        pts = self.require_interior(x, name="x")
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        a = self.radius
        norm_xi = float(np.hypot(center[0], center[1]))
        if norm_xi < _SINGULAR_FACTOR * self.diameter:
            values = np.full(pts.shape[:-1], -4.0 * np.log(a))
        else:
            star = self._image(center)
            d_star = np.hypot(pts[..., 0] - star[0], pts[..., 1] - star[1])
            values = -4.0 * np.log(norm_xi * d_star / a)
        return float(values) if values.ndim == 0 else values

    def grad_x_regular_part(self, x, xi) -> FloatArray:
        """``grad_x H(x, xi) = -4 (x - xi*) / |x - xi*|^2`` (zero for ``xi = 0``)."""
        pts = self.require_interior(x, name="x")
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        norm_xi = float(np.hypot(center[0], center[1]))
        if norm_xi < _SINGULAR_FACTOR * self.diameter:
            return np.zeros(np.broadcast_shapes(pts.shape, (2,)))
        star = self._image(center)
        rel = pts - star
        r2 = np.sum(rel * rel, axis=-1, keepdims=True)
        return -4.0 * rel / r2

    def robin(self, xi) -> float:
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        a = self.radius
        r2 = float(center @ center)
        return float(-4.0 * np.log((a * a - r2) / a))

    def grad_robin(self, xi) -> FloatArray:
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        r2 = float(center @ center)
        return 8.0 * center / (self.radius**2 - r2)


class GridDomain:
    """Rectangle lattice domain with a "square" or "disk" interior mask.

    ``H(., xi)`` is obtained from a five-point discrete Laplace solve with
    boundary data ``Gamma(. - xi)``; for the disk mask, stencil arms crossing
    the circle are shortened to the exact intersection (Shortley-Weller) so
    the boundary data is imposed on the true circle. The factorized operator
    doubles as a Poisson solver with zero boundary data. Instances are
    immutable after construction and safe to share across threads.
    """

    def __init__(self, extent, h: float, mask: Literal["square", "disk"] = "square"):
        extent = tuple(float(v) for v in extent)
        if len(extent) != 4:
            raise ValidationError("extent must be (x0, x1, y0, y1)")
        x0, x1, y0, y1 = extent
        if not (x1 > x0 and y1 > y0):
            raise ValidationError(f"degenerate extent {extent}")
        if not (np.isfinite(h) and h > 0.0):
            raise ValidationError(f"resolution must be positive, got {h}")
        nx = int(round((x1 - x0) / h)) + 1
        ny = int(round((y1 - y0) / h)) + 1
        if nx < 5 or ny < 5:
            raise ValidationError("grid too coarse: need at least 5 nodes per side")
        hx = (x1 - x0) / (nx - 1)
        hy = (y1 - y0) / (ny - 1)
        if abs(hx - hy) > 1e-9 * max(hx, hy):
            raise ValidationError("extent and resolution must produce square cells")
        if mask not in ("square", "disk"):
            raise ValidationError(f"unknown mask kind {mask!r}")

        self.extent = extent
        self.h = float(hx)
        self.mask_kind = mask
        self.xs = np.linspace(x0, x1, nx)
        self.ys = np.linspace(y0, y1, ny)
        self.nx, self.ny = nx, ny
        self.X, self.Y = np.meshgrid(self.xs, self.ys)
        self._center = np.array([(x0 + x1) / 2.0, (y0 + y1) / 2.0])
        self._disk_radius = min(x1 - x0, y1 - y0) / 2.0

        if mask == "disk":
            rel2 = (self.X - self._center[0]) ** 2 + (self.Y - self._center[1]) ** 2
            self.inside = rel2 < (self._disk_radius * (1.0 - 1e-12)) ** 2
        else:
            self.inside = np.zeros((ny, nx), dtype=bool)
            self.inside[1:-1, 1:-1] = True
        if not self.inside.any():
            raise ValidationError("mask leaves no interior nodes")

        self._assemble()
        self._spline_cache: dict[tuple[float, float], RectBivariateSpline] = {}
        self._spline_order: list[tuple[float, float]] = []

    # -- geometry ----------------------------------------------------------

    @property
    def kind(self) -> str:
        return "grid-numeric"

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.extent
        if self.mask_kind == "disk":
            return 2.0 * self._disk_radius
        return float(np.hypot(x1 - x0, y1 - y0))

    def contains(self, x) -> np.ndarray | bool:
        pts = as_points(x, name="x")
        x0, x1, y0, y1 = self.extent
        if self.mask_kind == "disk":
            rel = pts - self._center
            inside = np.hypot(rel[..., 0], rel[..., 1]) < self._disk_radius
        else:
            inside = ((pts[..., 0] > x0) & (pts[..., 0] < x1)
                      & (pts[..., 1] > y0) & (pts[..., 1] < y1))
        return bool(inside) if inside.ndim == 0 else inside

    def boundary_distance(self, x) -> FloatArray | float:
        pts = as_points(x, name="x")
        x0, x1, y0, y1 = self.extent
        if self.mask_kind == "disk":
            rel = pts - self._center
            d = self._disk_radius - np.hypot(rel[..., 0], rel[..., 1])
        else:
            d = np.minimum.reduce([
                pts[..., 0] - x0, x1 - pts[..., 0],
                pts[..., 1] - y0, y1 - pts[..., 1],
            ])
        return float(d) if np.ndim(d) == 0 else d

    def require_interior(self, x, *, name: str = "point") -> FloatArray:
        pts = as_points(x, name=name)
        if not np.all(self.contains(pts)):
            raise DomainError(f"{name} lies outside the {self.mask_kind} mask interior")
        return pts

    # -- discrete operator ---------------------------------------------------

    def _cut_fraction(self, along_x: bool, sign: int) -> FloatArray:
        """Arm fraction to the circle for nodes whose neighbor leaves the mask."""
        xr = self.X - self._center[0]
        yr = self.Y - self._center[1]
        a = self._disk_radius
        if along_x:
            root = np.sqrt(np.maximum(a * a - yr * yr, 0.0))
            t = (root - sign * xr) / self.h
        else:
            root = np.sqrt(np.maximum(a * a - xr * xr, 0.0))
            t = (root - sign * yr) / self.h
        return np.clip(t, 1e-3, 1.0)

    def _assemble(self) -> None:
        ny, nx, h = self.ny, self.nx, self.h
        inside = self.inside
        idx = np.full((ny, nx), -1, dtype=np.int64)
        n = int(inside.sum())
        idx[inside] = np.arange(n)

        def shifted_inside(dj: int, di: int) -> np.ndarray:
            out = np.zeros_like(inside)
            src = inside
            if dj > 0:
                out[: ny - dj, :] = src[dj:, :]
            elif dj < 0:
                out[-dj:, :] = src[: ny + dj, :]
            else:
                out = src.copy()
            if di > 0:
                tmp = np.zeros_like(out)
                tmp[:, : nx - di] = out[:, di:]
                out = tmp
            elif di < 0:
                tmp = np.zeros_like(out)
                tmp[:, -di:] = out[:, : nx + di]
                out = tmp
            return out

        # alpha arrays per direction: 1 where the neighbor is interior, else the
        # cut fraction to the true boundary.
        dirs = {
            "e": (0, 1, True, 1), "w": (0, -1, True, -1),
            "n": (1, 0, False, 1), "s": (-1, 0, False, -1),
        }
        alpha: dict[str, FloatArray] = {}
        nb_inside: dict[str, np.ndarray] = {}
        for name_, (dj, di, along_x, sign) in dirs.items():
            nb = shifted_inside(dj, di)
            a_arr = np.ones((ny, nx))
            cut_mask = inside & ~nb
            if cut_mask.any():
                if self.mask_kind == "disk":
                    frac = self._cut_fraction(along_x, sign)
                    a_arr[cut_mask] = frac[cut_mask]
                else:
                    a_arr[cut_mask] = 1.0
            alpha[name_] = a_arr
            nb_inside[name_] = nb

        aE, aW, aN, aS = alpha["e"], alpha["w"], alpha["n"], alpha["s"]
        inv_h2 = 1.0 / (h * h)
        diag = 2.0 * inv_h2 * (1.0 / (aE * aW) + 1.0 / (aN * aS))

        rows = [idx[inside]]
        cols = [idx[inside]]
        vals = [diag[inside]]
        b_rows: list[np.ndarray] = []
        b_weights: list[FloatArray] = []
        b_points: list[FloatArray] = []

        for name_, (dj, di, along_x, sign) in dirs.items():
            a_this = alpha[name_]
            a_opp = alpha[{"e": "w", "w": "e", "n": "s", "s": "n"}[name_]]
            coeff = 2.0 * inv_h2 / (a_this * (a_this + a_opp))
            nb = nb_inside[name_]
            link = inside & nb
            if link.any():
                jj, ii = np.nonzero(link)
                rows.append(idx[link])
                cols.append(idx[jj + dj, ii + di])
                vals.append(-coeff[link])
            cut = inside & ~nb
            if cut.any():
                jj, ii = np.nonzero(cut)
                b_rows.append(idx[cut])
                b_weights.append(coeff[cut])
                px = self.xs[ii] + (di * a_this[cut] * h)
                py = self.ys[jj] + (dj * a_this[cut] * h)
                b_points.append(np.column_stack([px, py]))

        matrix = coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n)).tocsc()
        try:
            self._lu = splu(matrix)
        except RuntimeError as exc:  # pragma: no cover - splu failure is exotic
            raise SolverError(f"sparse factorization failed: {exc}") from exc
        self._idx = idx
        self._n = n
        self._b_rows = np.concatenate(b_rows)
        self._b_weights = np.concatenate(b_weights)
        self._b_points = np.concatenate(b_points, axis=0)

    # -- solves -------------------------------------------------------------

    def laplace_solve(self, data: Callable[[FloatArray], FloatArray]) -> FloatArray:
        """Solve ``Delta u = 0`` inside the mask with Dirichlet data ``data``.

        Returns a full ``(ny, nx)`` array; nodes outside the mask carry the
        data function itself (a continuous extension used for interpolation).
        """
        boundary_values = np.asarray(data(self._b_points), dtype=np.float64)
        rhs = np.zeros(self._n)
        np.add.at(rhs, self._b_rows, self._b_weights * boundary_values)
        u = self._lu.solve(rhs)
        full = np.empty((self.ny, self.nx))
        outside = ~self.inside
        pts_out = np.column_stack([self.X[outside], self.Y[outside]])
        full[outside] = np.asarray(data(pts_out), dtype=np.float64)
        full[self.inside] = u
        return full

    def poisson_solve(self, rhs_full: FloatArray) -> FloatArray:
        """Solve ``-Delta u = rhs`` with zero Dirichlet data; returns full grid."""
        rhs_full = np.asarray(rhs_full, dtype=np.float64)
        if rhs_full.shape != (self.ny, self.nx):
            raise ValidationError(
                f"rhs shape {rhs_full.shape} does not match grid ({self.ny}, {self.nx})")
        u = self._lu.solve(rhs_full[self.inside])
        full = np.zeros((self.ny, self.nx))
        full[self.inside] = u
        return full

    # -- Green machinery ------------------------------------------------------

    def _regular_spline(self, xi: FloatArray) -> RectBivariateSpline:
        key = (float(xi[0]), float(xi[1]))
        cached = self._spline_cache.get(key)
        if cached is not None:
            return cached
        data = lambda pts: gamma_fundamental(pts - xi)
        full = self.laplace_solve(data)
        spline = RectBivariateSpline(self.ys, self.xs, full, kx=3, ky=3, s=0)
        self._spline_cache[key] = spline
        self._spline_order.append(key)
        if len(self._spline_order) > 128:
            oldest = self._spline_order.pop(0)
            self._spline_cache.pop(oldest, None)
        return spline

    def regular_part(self, x, xi) -> FloatArray | float:
        pts = self.require_interior(x, name="x")
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        spline = self._regular_spline(center)
        values = spline.ev(pts[..., 1], pts[..., 0])
        return float(values) if np.ndim(values) == 0 else values

    def robin(self, xi) -> float:
        center = self.require_interior(as_point(xi, name="xi"), name="xi")
        return float(self.regular_part(center, center))


# -- module-level operations (domain-dispatching) ------------------------------


def regular_part(domain, x, xi) -> FloatArray | float:
    """``H(x, xi)``: the regular (harmonic) part of the Green function."""
    return domain.regular_part(x, xi)


def green(domain, x, xi) -> FloatArray | float:
    """Green function ``G(x, xi) = Gamma(x - xi) - H(x, xi)``."""
    pts = domain.require_interior(x, name="x")
    center = domain.require_interior(as_point(xi, name="xi"), name="xi")
    rel = pts - center
    dist = np.hypot(rel[..., 0], rel[..., 1])
    if np.any(dist < _SINGULAR_FACTOR * domain.diameter):
        raise SingularEvaluationError("Green function evaluated on its diagonal")
    values = gamma_fundamental(rel) - domain.regular_part(pts, center)
    return float(values) if np.ndim(values) == 0 else values


def grad_x_green(domain, x, xi) -> FloatArray:
    """``grad_x G(x, xi)`` (closed form on the disk; spline derivative on grids)."""
    pts = domain.require_interior(x, name="x")
    center = domain.require_interior(as_point(xi, name="xi"), name="xi")
    rel = pts - center
    r2 = np.sum(rel * rel, axis=-1, keepdims=True)
    if np.any(r2 < (_SINGULAR_FACTOR * domain.diameter) ** 2):
        raise SingularEvaluationError("Green gradient evaluated on its diagonal")
    grad_gamma = -4.0 * rel / r2
    if isinstance(domain, DiskDomain):
        return grad_gamma - domain.grad_x_regular_part(pts, center)
    spline = domain._regular_spline(center)
    gx = spline.ev(pts[..., 1], pts[..., 0], dx=0, dy=1)
    gy = spline.ev(pts[..., 1], pts[..., 0], dx=1, dy=0)
    return grad_gamma - np.stack([gx, gy], axis=-1).reshape(pts.shape)


def robin(domain, xi) -> float:
    """Robin function ``H(xi, xi)``."""
    return domain.robin(xi)


def grad_robin(domain, xi) -> FloatArray:
    """Gradient of the Robin function (closed form on the disk, differences on grids)."""
    if isinstance(domain, DiskDomain):
        return domain.grad_robin(xi)
    center = domain.require_interior(as_point(xi, name="xi"), name="xi")
    step = 1e-4 * domain.diameter
    grad = np.zeros(2)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = 1.0
        f2p = domain.robin(center + 2 * step * e)
        f1p = domain.robin(center + step * e)
        f1m = domain.robin(center - step * e)
        f2m = domain.robin(center - 2 * step * e)
        grad[axis] = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * step)
    return grad


def _require_no_collision(domain, cfg: VortexConfiguration) -> None:
    threshold = COLLISION_FACTOR * domain.diameter
    d_min = cfg.min_pairwise_distance()
    if d_min < threshold:
        raise CollisionError(
            f"min pairwise distance {d_min:.3e} below collision threshold {threshold:.3e}")


def kirchhoff_routh(domain, cfg: VortexConfiguration) -> float:
    """Interaction energy ``K`` of a vortex configuration."""
    domain.require_interior(cfg.positions, name="positions")
    _require_no_collision(domain, cfg)
    kappa = cfg.strengths
    total = 0.0
    for i in range(cfg.count):
        total -= 0.5 * kappa[i] ** 2 * domain.robin(cfg.positions[i])
    for i in range(cfg.count):
        for j in range(i + 1, cfg.count):
            total += kappa[i] * kappa[j] * green(domain, cfg.positions[i], cfg.positions[j])
    return float(total)


def _grad_K(domain, cfg: VortexConfiguration) -> FloatArray:
    """``grad_{xi_j} K`` for each vortex, shape (N, 2)."""
    domain.require_interior(cfg.positions, name="positions")
    _require_no_collision(domain, cfg)
    n = cfg.count
    kappa = cfg.strengths
    if isinstance(domain, DiskDomain):
        grads = np.zeros((n, 2))
        for j in range(n):
            g = -0.5 * kappa[j] ** 2 * domain.grad_robin(cfg.positions[j])
            for i in range(n):
                if i == j:
                    continue
                g = g + kappa[i] * kappa[j] * grad_x_green(
                    domain, cfg.positions[j], cfg.positions[i])
            grads[j] = g
        return grads
    step = 1e-4 * domain.diameter
    grads = np.zeros((n, 2))
    for j in range(n):
        for axis in range(2):
            samples = []
            for offset in (2.0, 1.0, -1.0, -2.0):
                moved = cfg.positions.copy()
                moved[j, axis] += offset * step
                samples.append(kirchhoff_routh(domain, cfg.with_positions(moved)))
            f2p, f1p, f1m, f2m = samples
            grads[j, axis] = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * step)
    return grads


def grad_perp_K(domain, cfg: VortexConfiguration) -> FloatArray:
    """``grad^perp_{xi_j} K`` for each vortex, shape (N, 2)."""
    return perp(_grad_K(domain, cfg))
