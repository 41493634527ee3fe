"""Core profile identities and the desingularized stream ansatz."""

import math

import numpy as np
import pytest

import oracles
from vortexlab._radial import integrate, log_radial_grid
from vortexlab.domains import DiskDomain, VortexConfiguration
from vortexlab.errors import (DomainError, SingularEvaluationError,
                              ValidationError)
from vortexlab.profiles import (BubbleParams, Gamma0, U0, ansatz,
                                ansatz_residual, ansatz_stream_gradient,
                                core_energy_oracle, grad_Gamma0, grad_U0,
                                stream_energy_in_ball)

DISK = DiskDomain(1.0)


def _params(eps, centers, strengths):
    return BubbleParams(eps, VortexConfiguration(
        np.asarray(centers, float), np.asarray(strengths, float)))


# ---------------------------------------------------------------------------
# The radial profile.

def test_profile_values_and_log_relation():
    y = np.array([0.7, -0.4])
    rho2 = float(y @ y)
    assert U0(y) == pytest.approx(8.0 / (1.0 + rho2) ** 2, rel=1e-14)
    assert Gamma0(y) == pytest.approx(math.log(U0(y)), rel=1e-14)


def test_profile_mass_quadratures():
    value, _ = oracles.profile_mass_quad()
    assert abs(value - 8.0 * math.pi) <= 1e-10
    # the package's own log-spaced radial quadrature agrees to its accuracy
    grid = log_radial_grid(1e6, n=4000)
    mass = 2.0 * math.pi * integrate(
        grid, grid.rho * 8.0 / (1.0 + grid.rho ** 2) ** 2)
    assert abs(mass - 8.0 * math.pi) < 1e-5


def test_profile_gradients_match_differences():
    y = np.array([0.3, 0.8])
    h = 1e-6
    for fn, grad in ((U0, grad_U0), (Gamma0, grad_Gamma0)):
        g = grad(y)
        for c in range(2):
            e = np.zeros(2)
            e[c] = h
            fd = (fn(y + e) - fn(y - e)) / (2 * h)
            assert g[c] == pytest.approx(fd, rel=1e-7, abs=1e-9)


def test_curvature_identity_pointwise():
    # -Delta Gamma0 = U0, probed by a five-point stencil with Richardson
    y = (0.45, -0.25)
    u = U0(np.asarray(y))
    coarse = -oracles.fd_laplacian(lambda p: Gamma0(np.asarray(p)), y, 2e-3)
    fine = -oracles.fd_laplacian(lambda p: Gamma0(np.asarray(p)), y, 1e-3)
    richardson = fine + (fine - coarse) / 3.0
    assert richardson == pytest.approx(u, rel=1e-7)


# ---------------------------------------------------------------------------
# The ansatz and its residual.

def test_bubble_params_validation():
    with pytest.raises(ValidationError):
        _params(0.0, [[0.0, 0.0]], [1.0])
    p = _params(0.1, [[0.2, 0.0]], [2.0])
    assert p.centers.shape == (1, 2)
    assert p.strengths[0] == 2.0


def test_ansatz_vorticity_is_scaled_profile():
    params = _params(0.2, [[0.3, 0.1]], [1.5])
    x = np.array([0.42, 0.1])
    omega, _ = ansatz(params, DISK, x)
    y = (x - params.centers[0]) / 0.2
    assert omega == pytest.approx(1.5 / 0.2 ** 2 * U0(y), rel=1e-12)


def test_ansatz_stream_solves_poisson_pointwise():
    params = _params(0.3, [[0.25, -0.1]], [1.0])
    x = (0.05, 0.15)
    omega, _ = ansatz(params, DISK, np.asarray(x))

    def psi_at(p):
        return ansatz(params, DISK, np.asarray(p))[1]

    coarse = -oracles.fd_laplacian(psi_at, x, 2e-3)
    fine = -oracles.fd_laplacian(psi_at, x, 1e-3)
    richardson = fine + (fine - coarse) / 3.0
    assert richardson == pytest.approx(omega, rel=1e-6)


def test_ansatz_stream_gradient_matches_differences():
    params = _params(0.25, [[0.2, 0.3]], [1.0])
    x = np.array([0.5, -0.2])
    g = ansatz_stream_gradient(params, DISK, x)
    h = 1e-6
    for c in range(2):
        e = np.zeros(2)
        e[c] = h
        fd = (ansatz(params, DISK, x + e)[1]
              - ansatz(params, DISK, x - e)[1]) / (2 * h)
        assert g[c] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_centered_vortex_residual_vanishes():
    # A centered vortex is a steady state: the image correction is constant,
    # so with a zero center velocity the residual is identically zero.
    params = _params(0.1, [[0.0, 0.0]], [1.0])
    xi_dot = np.zeros((1, 2))
    for x in ([0.05, 0.0], [0.2, 0.2], [0.0, 0.6]):
        r = ansatz_residual(params, DISK, xi_dot, np.asarray(x))
        assert abs(r) < 1e-12


def test_residual_guards():
    params = _params(0.1, [[0.3, 0.0]], [1.0])
    with pytest.raises(ValidationError):
        ansatz_residual(params, DISK, np.zeros((2, 2)), np.array([0.5, 0.0]))
    with pytest.raises(SingularEvaluationError):
        ansatz_residual(params, DISK, np.zeros((1, 2)), np.array([0.3, 0.0]))


# ---------------------------------------------------------------------------
# Core energy.

def test_core_energy_oracle_matches_quad():
    for eps, radius in ((0.05, 0.2), (0.025, 0.2), (0.1, 0.35)):
        expected = oracles.core_energy_quad(eps, radius)
        assert core_energy_oracle(eps, radius) == pytest.approx(
            expected, rel=1e-10)


def test_stream_energy_centered_matches_oracle():
    eps = 0.05
    params = _params(eps, [[0.0, 0.0]], [1.0])
    e = stream_energy_in_ball(params, DISK, np.zeros(2), 0.2)
    assert e == pytest.approx(core_energy_oracle(eps, 0.2), rel=1e-6)


def test_stream_energy_scales_with_strength_squared():
    eps = 0.05
    e1 = stream_energy_in_ball(_params(eps, [[0.1, 0.0]], [1.0]), DISK,
                               np.array([0.1, 0.0]), 0.2)
    e2 = stream_energy_in_ball(_params(eps, [[0.1, 0.0]], [2.0]), DISK,
                               np.array([0.1, 0.0]), 0.2)
    assert e2 / e1 == pytest.approx(4.0, rel=1e-9)


def test_stream_energy_ball_containment_guard():
    params = _params(0.05, [[0.0, 0.0]], [1.0])
    with pytest.raises(DomainError):
        stream_energy_in_ball(params, DISK, np.array([0.9, 0.0]), 0.2)
