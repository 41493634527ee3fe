"""Green functions, Robin function, grids, and the interaction energy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vortexlab.domains import (DiskDomain, GridDomain, VortexConfiguration,
                               gamma_fundamental, grad_gamma_fundamental,
                               grad_perp_K, grad_robin, grad_x_green, green,
                               kirchhoff_routh, perp, robin)
from vortexlab.errors import (CollisionError, DomainError,
                              SingularEvaluationError, ValidationError)

RNG = np.random.default_rng(42)


# ---------------------------------------------------------------------------
# Elementary pieces.

@settings(max_examples=25, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_perp_algebra(a, b):
    v = np.array([a, b])
    w = perp(v)
    assert w[0] == b and w[1] == -a
    assert abs(float(v @ w)) <= 1e-14 * (1.0 + abs(a * b))
    assert np.all(perp(w) == -v)


def test_fundamental_solution_value_and_gradient():
    x = np.array([0.3, -0.4])
    assert gamma_fundamental(x) == pytest.approx(4.0 * math.log(2.0), rel=1e-14)
    h = 1e-6
    for c in range(2):
        e = np.zeros(2)
        e[c] = h
        fd = (gamma_fundamental(x + e) - gamma_fundamental(x - e)) / (2 * h)
        assert grad_gamma_fundamental(x)[c] == pytest.approx(fd, abs=1e-8)


def test_fundamental_solution_singularity_guard():
    with pytest.raises(SingularEvaluationError):
        gamma_fundamental(np.zeros(2))
    with pytest.raises(SingularEvaluationError):
        grad_gamma_fundamental(np.zeros(2))


def test_vortex_configuration_validation():
    with pytest.raises(ValidationError):
        VortexConfiguration(np.zeros((2, 3)), np.ones(2))
    with pytest.raises(ValidationError):
        VortexConfiguration(np.zeros((0, 2)), np.ones(0))
    with pytest.raises(ValidationError):
        VortexConfiguration(np.zeros((2, 2)), np.ones(2))  # coincident
    single = VortexConfiguration(np.array([[0.1, 0.2]]), np.array([1.0]))
    assert single.min_pairwise_distance() == math.inf
    pair = VortexConfiguration(np.array([[0.0, 0.0], [0.3, 0.4]]),
                               np.array([1.0, -2.0]))
    assert pair.min_pairwise_distance() == pytest.approx(0.5, rel=1e-14)


# ---------------------------------------------------------------------------
# Closed-form disk domain against the independent images formula.

def test_disk_green_matches_images_formula():
    disk = DiskDomain(1.3)
    for _ in range(20):
        x = 1.3 * 0.95 * RNG.uniform(-0.7, 0.7, 2)
        xi = 1.3 * 0.95 * RNG.uniform(-0.7, 0.7, 2)
        if np.linalg.norm(x - xi) < 1e-3:
            continue
        expected = oracles.disk_green(1.3, x, xi)
        assert green(disk, x, xi) == pytest.approx(expected, rel=1e-12, abs=1e-12)
        # symmetry of the Green function
        assert green(disk, xi, x) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_disk_green_vanishes_on_boundary():
    disk = DiskDomain(1.0)
    xi = np.array([0.4, 0.1])
    for theta in np.linspace(0, 2 * np.pi, 9)[:-1]:
        x = 0.999999 * np.array([np.cos(theta), np.sin(theta)])
        assert abs(green(disk, x, xi)) < 1e-4


def test_disk_regular_part_and_center_limit():
    disk = DiskDomain(0.8)
    x, xi = np.array([0.3, -0.2]), np.array([-0.1, 0.25])
    expected = oracles.disk_regular_part(0.8, x, xi)
    assert disk.regular_part(x, xi) == pytest.approx(expected, rel=1e-12)
    # the centered source has the constant regular part -4 log(radius)
    assert disk.regular_part(np.array([0.31, 0.17]), np.zeros(2)) == \
        pytest.approx(-4.0 * math.log(0.8), rel=1e-13)


def test_disk_robin_and_gradient():
    disk = DiskDomain(1.0)
    xi = np.array([0.35, -0.15])
    assert robin(disk, xi) == pytest.approx(oracles.disk_robin(1.0, xi), rel=1e-13)
    r2 = float(xi @ xi)
    expected_grad = 8.0 * xi / (1.0 - r2)
    assert grad_robin(disk, xi) == pytest.approx(expected_grad, rel=1e-8)


def test_disk_grad_x_green_matches_differences():
    disk = DiskDomain(1.0)
    x, xi = np.array([0.2, 0.5]), np.array([-0.3, -0.1])
    g = grad_x_green(disk, x, xi)
    h = 1e-6
    for c in range(2):
        e = np.zeros(2)
        e[c] = h
        fd = (green(disk, x + e, xi) - green(disk, x - e, xi)) / (2 * h)
        assert g[c] == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_disk_membership_and_guards():
    disk = DiskDomain(1.0)
    assert disk.contains(np.array([0.99, 0.0]))
    assert not disk.contains(np.array([1.0, 0.0]))
    assert disk.boundary_distance(np.array([0.6, 0.0])) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        disk.require_interior(np.array([1.2, 0.0]), name="probe")
    with pytest.raises(SingularEvaluationError):
        green(disk, np.array([0.2, 0.2]), np.array([0.2, 0.2]))


# ---------------------------------------------------------------------------
# Grid-backed domain.

def test_grid_validation():
    with pytest.raises(ValidationError):
        GridDomain((0, 1, 0, 1), 0.5)  # too coarse
    with pytest.raises(ValidationError):
        GridDomain((0, 1, 0, 0.95), 0.1)  # non-square cells
    with pytest.raises(ValidationError):
        GridDomain((0, 1, 0, 1), 0.05, mask="hexagon")


def test_grid_laplace_exact_on_harmonic_quadratic():
    # The cut-cell five-point stencil reproduces quadratics exactly, so a
    # harmonic quadratic must come back at machine precision.
    g = GridDomain((-1, 1, -1, 1), 1 / 16, mask="disk")
    u = g.laplace_solve(lambda p: p[..., 0] ** 2 - p[..., 1] ** 2)
    err = np.max(np.abs(u - (g.X ** 2 - g.Y ** 2))[g.inside])
    assert err < 1e-11


def test_grid_poisson_second_order():
    errors = []
    for h in (1 / 32, 1 / 64):
        g = GridDomain((0, 1, 0, 1), h, mask="square")
        exact = np.sin(np.pi * g.X) * np.sin(np.pi * g.Y)
        u = g.poisson_solve(2.0 * np.pi ** 2 * exact)
        errors.append(float(np.max(np.abs(u - exact)[g.inside])))
    assert errors[0] < 1e-3
    assert errors[0] / errors[1] > 3.5  # second-order decay


def test_grid_regular_part_tracks_disk_formula():
    g = GridDomain((-1, 1, -1, 1), 1 / 32, mask="disk")
    xi = np.array([0.35, 0.2])
    x = np.array([0.5, -0.3])
    expected = oracles.disk_regular_part(1.0, x, xi)
    assert g.regular_part(x, xi) == pytest.approx(expected, abs=5e-3)


def test_grid_green_interior_guard():
    g = GridDomain((-1, 1, -1, 1), 1 / 16, mask="disk")
    with pytest.raises(DomainError):
        green(g, np.array([0.99, 0.99]), np.array([0.1, 0.0]))


# ---------------------------------------------------------------------------
# Interaction energy and its perpendicular gradient.

def _random_config(n, radius=1.0):
    while True:
        pos = RNG.uniform(-0.6, 0.6, (n, 2)) * radius
        cfg = VortexConfiguration(pos, RNG.uniform(0.5, 1.5, n)
                                  * RNG.choice([-1.0, 1.0], n))
        if cfg.min_pairwise_distance() > 0.25 * radius:
            return cfg


def test_kirchhoff_routh_matches_oracle():
    disk = DiskDomain(1.0)
    cfg = _random_config(3)
    expected = oracles.hamiltonian(1.0, cfg.positions, cfg.strengths)
    assert kirchhoff_routh(disk, cfg) == pytest.approx(expected, rel=1e-12)


def test_grad_perp_K_matches_fd_oracle():
    disk = DiskDomain(1.0)
    cfg = _random_config(3)
    vel_expected = oracles._fd_velocity(
        1.0, cfg.positions.ravel(), cfg.strengths).reshape(-1, 2)
    vel = grad_perp_K(disk, cfg) / cfg.strengths[:, None]
    assert vel == pytest.approx(vel_expected, rel=1e-6, abs=1e-8)


def test_kirchhoff_routh_collision_guard():
    disk = DiskDomain(1.0)
    cfg = VortexConfiguration(
        np.array([[0.1, 0.0], [0.1 + 1e-9, 0.0]]), np.array([1.0, 1.0]))
    with pytest.raises(CollisionError):
        kirchhoff_routh(disk, cfg)
