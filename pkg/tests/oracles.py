"""Independent reference computations used to cross-check the package.

Everything here is written directly from closed forms or scipy primitives,
never by calling package internals, so agreement between the two is
evidence rather than tautology.  The normalization throughout matches the
package: the Green function solves ``-Delta G = 8 pi delta`` with zero
boundary values, i.e. ``G = 4 log(1/|x - xi|) - H(x, xi)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, solve_ivp


# ---------------------------------------------------------------------------
# Disk Green function by the method of images.

def disk_green(radius: float, x, xi) -> float:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r2 = float(xi @ xi)
    if r2 == 0.0:
        return 4.0 * math.log(radius / float(np.linalg.norm(x)))
    image = (radius * radius / r2) * xi
    num = float(np.linalg.norm(x - image)) * math.sqrt(r2)
    den = radius * float(np.linalg.norm(x - xi))
    return 4.0 * math.log(num / den)


def disk_regular_part(radius: float, x, xi) -> float:
    """H(x, xi) = 4 log(1/|x - xi|) - G(x, xi)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return 4.0 * math.log(1.0 / float(np.linalg.norm(x - xi))) - disk_green(
        radius, x, xi)


def disk_robin(radius: float, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    r2 = float(xi @ xi)
    return -4.0 * math.log((radius * radius - r2) / radius)


# ---------------------------------------------------------------------------
# Point-vortex reference dynamics: Hamiltonian with finite-difference
# gradients fed to scipy's adaptive integrator.

def hamiltonian(radius: float, positions, strengths) -> float:
    pos = np.asarray(positions, dtype=float)
    kap = np.asarray(strengths, dtype=float)
    n = len(kap)
    value = 0.0
    for i in range(n):
        value -= 0.5 * kap[i] ** 2 * disk_robin(radius, pos[i])
        for j in range(i + 1, n):
            value += kap[i] * kap[j] * disk_green(radius, pos[i], pos[j])
    return value


def _fd_velocity(radius, flat, strengths, step=1e-6):
    pos = flat.reshape(-1, 2)
    n = len(strengths)
    vel = np.zeros_like(pos)
    for i in range(n):
        for c in range(2):
            plus = pos.copy()
            minus = pos.copy()
            plus[i, c] += step
            minus[i, c] -= step
            dk = (hamiltonian(radius, plus, strengths)
                  - hamiltonian(radius, minus, strengths)) / (2.0 * step)
            if c == 0:
                vel[i, 1] = -dk / strengths[i]
            else:
                vel[i, 0] = dk / strengths[i]
    return vel.ravel()


def point_vortex_reference(radius, positions, strengths, T,
                           rtol=1e-10, atol=1e-12):
    """Final positions after time T, by solve_ivp on the image-sum system."""
    kap = np.asarray(strengths, dtype=float)
    sol = solve_ivp(
        lambda t, y: _fd_velocity(radius, y, kap),
        (0.0, T),
        np.asarray(positions, dtype=float).ravel(),
        method="RK45", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1].reshape(-1, 2)


def single_vortex_rate(radius: float, r0: float, kappa: float) -> float:
    """Angular rate of the circular orbit of one vortex at radius r0."""
    return 4.0 * kappa / (radius * radius - r0 * r0)


def single_vortex_orbit(radius, r0, kappa, t, theta0=0.0):
    theta = theta0 + single_vortex_rate(radius, r0, kappa) * np.asarray(t)
    return r0 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)


# ---------------------------------------------------------------------------
# Radial quadratures for the core profile.

def profile_mass_quad() -> tuple[float, float]:
    """(value, abserr) of the total integral of 8/(1+r^2)^2 over the plane."""
    return quad(lambda r: 2.0 * np.pi * r * 8.0 / (1.0 + r * r) ** 2,
                0.0, np.inf)


def core_energy_quad(eps: float, radius: float) -> float:
    """Dirichlet energy of one unit-strength core stream inside a ball.

    The centered core stream has radial gradient magnitude
    ``4 r / (eps^2 + r^2)``; integrate its square over the ball.
    """
    value, _ = quad(
        lambda r: 2.0 * np.pi * r * (4.0 * r / (eps * eps + r * r)) ** 2,
        0.0, radius)
    return value


# ---------------------------------------------------------------------------
# Five-point Laplacian probe.

def fd_laplacian(fn, point, h):
    x, y = float(point[0]), float(point[1])
    return (fn((x + h, y)) + fn((x - h, y)) + fn((x, y + h))
            + fn((x, y - h)) - 4.0 * fn((x, y))) / (h * h)


# ---------------------------------------------------------------------------
# Manufactured radial mode pairs: profile p with its modal source g such
# that the radial transport operator maps p to f = i (1+rho^2) g / (4k).

def manufactured_profile(k: int):
    """Return (p, g, decay_power): callables of rho and the decay of |g|.

    ``p = rho^a (1+rho^2)^(-m)`` with a = |k| and m = 2 for |k| = 1,
    m = |k| otherwise; differentiating twice gives
    ``L_k[p] = p * [-(4a+2) m / X + ((4 m^2 + 2 m) rho^2 - 2 m + 8) / X^2]``
    with X = 1 + rho^2, and the modal source is g = -4 i k L_k[p] / X.
    """
    a = abs(int(k))
    m = 2 if a == 1 else a

    def p(rho):
        rho = np.asarray(rho, dtype=float)
        return rho ** a * (1.0 + rho * rho) ** (-m)

    def bracket(rho):
        rho = np.asarray(rho, dtype=float)
        X = 1.0 + rho * rho
        return (-(4.0 * a + 2.0) * m / X
                + ((4.0 * m * m + 2.0 * m) * rho * rho - 2.0 * m + 8.0) / X**2)

    def g(rho):
        rho = np.asarray(rho, dtype=float)
        return -4.0j * k * p(rho) * bracket(rho) / (1.0 + rho * rho)

    return p, g, float(2 * m - a + 2)


def mode_operator_fd(k: int, rho, p):
    """Apply L_k[p] = p'' + p'/rho - k^2 p/rho^2 + U0 p by differences.

    ``rho`` must be uniformly spaced; accuracy is O(h^2) in the interior.
    """
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=complex)
    h = rho[1] - rho[0]
    d1 = np.gradient(p, h, edge_order=2)
    d2 = np.gradient(d1, h, edge_order=2)
    u0 = 8.0 / (1.0 + rho * rho) ** 2
    return d2 + d1 / rho - (k * k) * p / rho**2 + u0 * p


# ---------------------------------------------------------------------------
# Equal-area midpoint quadrature on a disk (for L^p norms of smooth fields).

def disk_quadrature(center, radius, n_r=60, n_t=128, shrink=0.999):
    cx, cy = float(center[0]), float(center[1])
    i = np.arange(n_r)
    r = np.sqrt((i + 0.5) / n_r) * radius * shrink
    t = (np.arange(n_t) + 0.5) * (2.0 * np.pi / n_t)
    R, T = np.meshgrid(r, t, indexing="ij")
    pts = np.stack([cx + R * np.cos(T), cy + R * np.sin(T)], axis=-1)
    weight = np.pi * (radius * shrink) ** 2 / (n_r * n_t)
    return pts.reshape(-1, 2), weight
