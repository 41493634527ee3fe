"""Stereographic transfer, spherical quadrature, kernels, and the gap form."""

import math

import numpy as np
import pytest

import oracles
from vortexlab._radial import log_radial_grid
from vortexlab.errors import (MassBalanceError, PoleError, ValidationError)
from vortexlab.fields import PolarModeField
from vortexlab.sphere import (GapResult, KernelSet, harmonic_pullback,
                              newtonian, project_orthogonal,
                              quadratic_form_gap, random_decaying_field,
                              sphere_quadrature, stereo_lift, stereo_project)

GRID = log_radial_grid(1000.0, n=1600)


# ---------------------------------------------------------------------------
# Stereographic coordinates.

def test_stereo_round_trip_from_plane():
    rng = np.random.default_rng(11)
    y = rng.normal(size=(40, 2)) * 3.0
    z = stereo_lift(y)
    assert np.max(np.abs(np.linalg.norm(z, axis=-1) - 1.0)) < 1e-12
    back = stereo_project(z)
    assert np.max(np.abs(back - y)) < 1e-10


def test_stereo_round_trip_from_sphere():
    rng = np.random.default_rng(12)
    z = rng.normal(size=(40, 3))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    z = z[z[:, 2] < 0.9]
    again = stereo_lift(stereo_project(z))
    assert np.max(np.abs(again - z)) < 1e-10


def test_stereo_guards():
    with pytest.raises(PoleError):
        stereo_project(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValidationError):
        stereo_project(np.array([0.0, 0.0, 2.0]))


def test_sphere_quadrature_exactness():
    points, weights = sphere_quadrature(40, 80)
    assert weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-12)
    assert float(weights @ points[:, 2] ** 2) == pytest.approx(
        4.0 * math.pi / 3.0, rel=1e-12)
    assert float(weights @ points[:, 0]) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# The logarithmic potential.

def test_newtonian_inverts_the_laplacian():
    # mode-1 source with fast decay; verify -Delta psi = phi by a
    # five-point probe of the synthesized planar fields
    c1 = GRID.rho / (1.0 + GRID.rho ** 2) ** 3
    phi = PolarModeField(GRID, {1: c1.astype(complex)})
    psi = newtonian(phi)

    def psi_at(p):
        return float(psi.value(np.asarray(p)))

    for point in ((0.8, 0.3), (1.5, -0.7)):
        lap = -oracles.fd_laplacian(psi_at, point, 2e-3)
        want = float(phi.value(np.asarray(point)))
        assert lap == pytest.approx(want, rel=2e-4, abs=1e-9)


def test_newtonian_zero_mass_zonal_source():
    c0 = 16.0 * (1.0 - GRID.rho ** 2) / (1.0 + GRID.rho ** 2) ** 3
    phi = PolarModeField(GRID, {0: c0.astype(complex)})
    # the analytic mass is zero; the grid truncation leaves ~1e-6 of it
    psi = newtonian(phi, mass_tol=1e-5)
    # decaying potential: small at the outer rim
    assert abs(psi.radial(0)[-1]) < 1e-4


def test_newtonian_requires_zero_mass():
    c0 = 8.0 / (1.0 + GRID.rho ** 2) ** 2
    phi = PolarModeField(GRID, {0: c0.astype(complex)})
    with pytest.raises(MassBalanceError):
        newtonian(phi)


# ---------------------------------------------------------------------------
# Kernels and moments.

def test_kernel_set_validation():
    with pytest.raises(ValidationError):
        KernelSet(0.5)
    with pytest.raises(ValidationError):
        KernelSet(100.0, nu=-1.0)
    with pytest.raises(ValidationError):
        KernelSet(100.0, b3=lambda rho: np.full_like(rho, 10.0))  # > R^-nu
    ks = KernelSet(100.0, b3=lambda rho: np.full_like(rho, 0.05))
    assert ks._b3_radial(np.array([1.0]))[0] == pytest.approx(0.05)


def test_kernel_values_on_the_plane():
    ks = KernelSet(100.0)
    pts = np.array([[0.3, 0.4], [600.0, 0.0]])
    assert np.allclose(ks.Z(0, pts), 1.0)
    z1 = ks.Z(1, pts)
    assert z1[0] == pytest.approx(0.3)
    assert z1[1] == 0.0  # beyond the 5R cutoff
    z3 = ks.Z(3, pts)
    rho2 = 0.25
    assert z3[0] == pytest.approx((1.0 - rho2) / (1.0 + rho2), rel=1e-12)


def test_project_orthogonal_kills_moments():
    rng = np.random.default_rng(5)
    ks = KernelSet(1000.0)
    phi = random_decaying_field(GRID, rng)
    projected = project_orthogonal(phi, ks)
    resid = ks.moments(projected)
    scale = ks.moments(projected, absolute=True)
    assert np.all(np.abs(resid) <= 1e-8 * np.maximum(scale, 1e-300))


def test_random_decaying_field_is_reproducible_and_decays():
    f1 = random_decaying_field(GRID, np.random.default_rng(9))
    f2 = random_decaying_field(GRID, np.random.default_rng(9))
    assert f1.mode_indices == f2.mode_indices
    for k in f1.mode_indices:
        assert np.array_equal(f1.radial(k), f2.radial(k))
    tail = max(np.abs(f1.radial(k)[-1]) for k in f1.mode_indices)
    head = max(np.max(np.abs(f1.radial(k))) for k in f1.mode_indices)
    assert tail < 1e-4 * head


# ---------------------------------------------------------------------------
# The quadratic form.

def test_gap_ratio_on_harmonic_pullbacks():
    R = 10000.0
    grid = log_radial_grid(8.0 * R, n=2400)
    for ell, kind in ((2, "sectoral"), (3, "zonal")):
        phi = harmonic_pullback(grid, ell, kind)
        result = quadratic_form_gap(phi, R)
        expected = 1.0 - 2.0 / (ell * (ell + 1))
        assert result.ratio == pytest.approx(expected, abs=1e-4)
        assert result.lower_bound_ratio == pytest.approx(
            result.ratio * abs(math.log(R)), rel=1e-12)


def test_gap_requires_orthogonality():
    phi = PolarModeField(
        GRID, {0: (8.0 / (1.0 + GRID.rho ** 2) ** 2).astype(complex)})
    with pytest.raises(ValidationError):
        quadratic_form_gap(phi, 1000.0)


def test_gap_positive_on_projected_random_samples():
    rng = np.random.default_rng(21)
    R = 1000.0
    grid = log_radial_grid(8.0 * R, n=1600)
    ks = KernelSet(R)
    for _ in range(5):
        phi = project_orthogonal(random_decaying_field(grid, rng), ks)
        result = quadratic_form_gap(phi, R, kernels=ks)
        assert isinstance(result, GapResult)
        assert result.weighted_norm_sq > 0.0
        assert result.ratio > 0.0


def test_harmonic_pullback_validation():
    with pytest.raises(ValidationError):
        harmonic_pullback(GRID, -1)
    with pytest.raises(ValidationError):
        harmonic_pullback(GRID, 2, "tesseral")
    with pytest.raises(ValidationError):
        harmonic_pullback(GRID, 2, "sectoral", flavor="tan")
