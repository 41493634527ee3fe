"""Grid-sampled fields, polar mode fields, and radial-grid quadratures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vortexlab._radial import (RadialGrid, cumulative_from_origin,
                               cumulative_to_end, integrate, log_radial_grid)
from vortexlab.errors import ValidationError
from vortexlab.fields import (PolarModeField, ScalarField2D,
                              bilinear_evaluator, field_from_callable,
                              read_field_binary, write_field_binary,
                              write_field_csv)

GRID = log_radial_grid(100.0, n=1200)


def _u0(rho):
    return 8.0 / (1.0 + rho * rho) ** 2


# ---------------------------------------------------------------------------
# Radial grids.

def test_radial_grid_validation():
    with pytest.raises(ValidationError):
        RadialGrid(np.linspace(0.0, 1.0, 10))  # zero start
    with pytest.raises(ValidationError):
        RadialGrid(np.ones(10))  # not increasing
    with pytest.raises(ValidationError):
        RadialGrid(np.linspace(0.1, 1.0, 5))  # too few nodes


def test_integrate_matches_quad():
    value = integrate(GRID, GRID.rho * _u0(GRID.rho))
    expected, _ = quad(lambda r: r * _u0(r), GRID.rho_min, GRID.rho_max)
    assert value == pytest.approx(expected, rel=1e-9)


def test_cumulative_from_origin_power_head():
    q = 1.0
    values = GRID.rho ** q
    cum = cumulative_from_origin(GRID, values, head_power=q)
    expected = GRID.rho ** (q + 1) / (q + 1)
    assert np.max(np.abs(cum - expected) / expected) < 1e-8
    with pytest.raises(ValidationError):
        cumulative_from_origin(GRID, values, head_power=-1.0)


def test_cumulative_to_end_complements_total():
    values = GRID.rho * _u0(GRID.rho)
    total = integrate(GRID, values)
    tail = cumulative_to_end(GRID, values)
    head = cumulative_from_origin(GRID, values)
    assert tail[0] == pytest.approx(total, rel=1e-10)
    mid = GRID.size // 2
    assert head[mid] + tail[mid] == pytest.approx(total, rel=1e-9)


# ---------------------------------------------------------------------------
# Planar scalar fields.

def _sample_field():
    n = 33
    h = 1.0 / (n - 1)
    xs = np.arange(n) * h
    X, Y = np.meshgrid(xs, xs)  # (ny, nx) layout, matching the field class
    mask = (X - 0.5) ** 2 + (Y - 0.5) ** 2 < 0.2
    return ScalarField2D(0.0, 0.0, h, np.sin(X) * np.cos(Y), mask)


def test_scalar_field_validation():
    with pytest.raises(ValidationError):
        ScalarField2D(0.0, 0.0, -0.1, np.zeros((9, 9)), np.ones((9, 9), bool))
    with pytest.raises(ValidationError):
        ScalarField2D(0.0, 0.0, 0.1, np.full((9, 9), np.nan),
                      np.ones((9, 9), bool))
    with pytest.raises(ValidationError):
        ScalarField2D(0.0, 0.0, 0.1, np.zeros((9, 9)), np.ones((8, 9), bool))


def test_field_integral_counts_masked_area():
    n = 21
    h = 0.05
    mask = np.ones((n, n), bool)
    field = ScalarField2D(0.0, 0.0, h, np.ones((n, n)), mask)
    assert field.integral() == pytest.approx(n * n * h * h, rel=1e-12)
    mask2 = mask.copy()
    mask2[:10, :] = False
    field2 = ScalarField2D(0.0, 0.0, h, np.ones((n, n)), mask2)
    assert field2.integral() == pytest.approx(11 * n * h * h, rel=1e-12)


def test_field_csv_and_binary_round_trip(tmp_path):
    field = _sample_field()
    csv_path = tmp_path / "field.csv"
    write_field_csv(field, csv_path)
    first = csv_path.read_text().splitlines()
    assert first[0] == "x,y,value"
    x, y, value = first[1].split(",")
    # repr round trip: the text recovers the stored float exactly
    assert (float(x), float(y), float(value)) == (0.0, 0.0, field.values[0, 0])

    bin_path = tmp_path / "field.vlf"
    write_field_binary(field, bin_path)
    back = read_field_binary(bin_path)
    assert back.h == field.h and back.x0 == field.x0 and back.y0 == field.y0
    assert np.array_equal(back.values, field.values)
    assert np.array_equal(back.mask, field.mask)

    bad = tmp_path / "bad.vlf"
    bad.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(ValidationError):
        read_field_binary(bad)


def test_bilinear_evaluator_interpolates_and_fills():
    field = _sample_field()
    ev = bilinear_evaluator(field)
    pts = np.array([[0.5, 0.5], [0.25, 0.75], [5.0, 5.0]])
    vals = ev(pts)
    assert vals[0] == pytest.approx(math.sin(0.5) * math.cos(0.5), abs=1e-3)
    assert vals[2] == 0.0  # outside the lattice -> fill value


# ---------------------------------------------------------------------------
# Polar mode fields.

def test_field_from_callable_recovers_band_limited_modes():
    def fn(points):
        x, y = points[..., 0], points[..., 1]
        rho = np.hypot(x, y)
        theta = np.arctan2(y, x)
        return _u0(rho) * (1.0 + np.cos(theta) + 0.3 * np.sin(2 * theta))

    field = field_from_callable(GRID, fn, n_theta=64)
    assert set(field.mode_indices) == {0, 1, 2}
    assert np.max(np.abs(field.radial(0) - _u0(GRID.rho))) < 1e-12
    assert np.max(np.abs(field.radial(1) - 0.5 * _u0(GRID.rho))) < 1e-12
    # sin(2 theta) = Im e^{2 i theta}: coefficient -0.15 i relative to u0
    assert np.max(np.abs(field.radial(2) + 0.15j * _u0(GRID.rho))) < 1e-12

    # synthesis at grid radii reproduces the callable
    theta = 1.234
    pts = np.stack([GRID.rho * math.cos(theta), GRID.rho * math.sin(theta)],
                   axis=-1)
    assert np.max(np.abs(field.value(pts) - fn(pts))) < 1e-10


def test_polar_mode_field_mass_and_norms():
    field = PolarModeField(GRID, {0: _u0(GRID.rho).astype(complex)})
    expected, _ = quad(lambda r: 2.0 * math.pi * r * _u0(r),
                       GRID.rho_min, GRID.rho_max)
    assert field.mass() == pytest.approx(expected, rel=1e-9)
    # with weight (1+rho^2)^2/8 the weighted square of u0 is u0 itself,
    # so the weighted norm equals the mass
    assert field.weighted_norm_sq() == pytest.approx(field.mass(), rel=1e-10)


def test_polar_mode_field_inner_product_orthogonality():
    c = _u0(GRID.rho).astype(complex)
    f0 = PolarModeField(GRID, {0: c})
    f1 = PolarModeField(GRID, {1: c})
    w = np.ones(GRID.size)
    assert f0.inner(f1, w) == pytest.approx(0.0, abs=1e-14)
    # mode-1 self inner product carries the doubled angular weight
    direct = 4.0 * math.pi * integrate(GRID, GRID.rho * np.abs(c) ** 2)
    assert f1.inner(f1, w) == pytest.approx(direct, rel=1e-12)


def test_polar_mode_field_validation_and_algebra():
    with pytest.raises(ValidationError):
        PolarModeField(GRID, {0: (1.0 + 1.0j) * np.ones(GRID.size)})
    with pytest.raises(ValidationError):
        PolarModeField(GRID, {-1: np.ones(GRID.size, complex)})
    c = _u0(GRID.rho).astype(complex)
    f = PolarModeField(GRID, {1: c})
    g = (f + f) - 0.5 * f
    assert np.max(np.abs(g.radial(1) - 1.5 * c)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-1e6, max_value=1e6,
                 allow_nan=False, allow_infinity=False))
def test_repr_float_round_trip(x):
    assert float(repr(x)) == x
