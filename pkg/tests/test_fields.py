import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oamlab.fields import (ATOMIC, ATOMIC_UNITS, INVERSE_MICROMETERS, MOMENTUM_SPACE,
                           SI_MICRON, ComplexField2D, Grid2D, PhysicalConstants,
                           RadialProfile, ScalarField2D, SuperpositionSpec, au_to_fs,
                           bilinear_sample, eval_superposition, eval_superposition_polar,
                           fs_to_au, make_cubic_grid, make_grid, reciprocal_of, sample_ring)


def kgrid(n=256, ext=2.0):
    return make_grid(n, n, ext, ext, MOMENTUM_SPACE, INVERSE_MICROMETERS)


def test_grid_spacing():
    g = make_grid(1024, 1024, 2.0, 2.0)
    assert g.dx == pytest.approx(3.90625e-3, rel=1e-15)


def test_reciprocal_spacing():
    g = make_grid(1024, 512, 2.0, 3.0)
    k = reciprocal_of(g)
    assert k.dx == pytest.approx(2 * math.pi / (g.nx * g.dx), rel=1e-14)
    assert k.dy == pytest.approx(2 * math.pi / (g.ny * g.dy), rel=1e-14)
    assert k.space_tag == MOMENTUM_SPACE and k.unit_tag == INVERSE_MICROMETERS
    back = reciprocal_of(k)
    assert back.extent_x == pytest.approx(g.extent_x)


def test_minimum_samples():
    make_grid(16, 16, 1.0, 1.0)
    with pytest.raises(ValueError):
        make_grid(15, 16, 1.0, 1.0)
    with pytest.raises(ValueError):
        make_grid(16, 16, 0.0, 1.0)
    with pytest.raises(ValueError):
        Grid2D(16, 16, 1.0, 1.0, "frequency")


@given(st.integers(8, 64).map(lambda h: 2 * h), st.floats(0.1, 100.0))
def test_grid_centred_and_polar_branch(n, ext):
    g = make_grid(n, n, ext, ext)
    assert g.x[n // 2] == 0.0 and g.y[n // 2] == 0.0
    assert g.dx == pytest.approx(2 * ext / n)
    r, phi = g.polar()
    assert np.all(r >= 0)
    assert np.all(phi > -math.pi) and np.all(phi <= math.pi)
    # the negative x-axis sits on +pi
    assert phi[n // 2, 0] == math.pi


def test_fields_reject_non_finite_and_are_read_only():
    g = make_grid(16, 16, 1.0, 1.0)
    with pytest.raises(ValueError):
        ScalarField2D(g, np.full(g.shape, np.nan))
    f = ComplexField2D(g, np.ones(g.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2


def test_atomic_constants_exact():
    assert ATOMIC.hbar == 1.0 and ATOMIC.electron_mass == 1.0
    assert SI_MICRON.hbar_over_mass == pytest.approx(1.054571817e-34 / 9.1093837015e-31 * 1e12)
    with pytest.raises(ValueError):
        PhysicalConstants("cgs")


def test_time_conversion_round_trip():
    assert au_to_fs(fs_to_au(25.0)) == pytest.approx(25.0, rel=1e-15)
    assert fs_to_au(1.0) == pytest.approx(41.341373, rel=1e-7)


def test_radial_profile_validation():
    with pytest.raises(ValueError):
        RadialProfile.gaussian(1.0, 0.0)
    with pytest.raises(ValueError):
        RadialProfile.tabulated([0.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    tab = RadialProfile.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert tab(np.array([0.5, 1.5, 3.0])) == pytest.approx([0.5, 0.5, 0.0])


def test_superposition_spec_validation():
    with pytest.raises(ValueError):
        SuperpositionSpec(0, 0)
    with pytest.raises(ValueError):
        SuperpositionSpec(1, 1, beta0=0.0)


def test_two_fold_density_for_unit_charges():
    xi = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    rho = np.abs(eval_superposition_polar(SuperpositionSpec(1, 1), np.ones_like(xi), xi)) ** 2
    assert rho == pytest.approx(2 * (1 + np.cos(2 * xi)), abs=1e-12)


def test_seven_fold_density():
    g = kgrid(128)
    G = RadialProfile.gaussian(1.0, 0.3)
    psi = eval_superposition(SuperpositionSpec(4, 3, 1.0, 0.0, G), g)
    k, xi = g.polar()
    expected = 2 * G(k) ** 2 * (1 + np.cos(7 * xi))
    assert np.abs(psi.values) ** 2 == pytest.approx(expected, abs=1e-12)


def test_beta_two_peak_to_valley_ratio():
    # |2 e^{4i xi} + e^{-3i xi}|^2 at xi = 0 and xi = pi/7: 9 and 1
    spec = SuperpositionSpec(4, 3, 2.0)
    v = np.abs(eval_superposition_polar(spec, np.ones(2), np.array([0.0, math.pi / 7]))) ** 2
    assert v[0] / v[1] == pytest.approx(9.0, rel=1e-12)


def test_evaluation_needs_momentum_grid():
    with pytest.raises(ValueError):
        eval_superposition(SuperpositionSpec(1, 0), make_grid(16, 16, 1.0, 1.0))


@given(st.integers(0, 6), st.integers(1, 6), st.floats(0.0, 2 * math.pi))
def test_rotational_symmetry_at_unit_beta(m, n, gamma):
    spec = SuperpositionSpec(m, n, 1.0, gamma)
    q = m + n
    k = np.linspace(0.1, 2.0, 7)[:, None]
    xi = np.linspace(-math.pi, math.pi, 41)[None, :]
    a = np.abs(eval_superposition_polar(spec, k + 0 * xi, xi + 0 * k)) ** 2
    b = np.abs(eval_superposition_polar(spec, k + 0 * xi, xi + 2 * math.pi / q + 0 * k)) ** 2
    assert np.max(np.abs(a - b)) <= 1e-6 * np.max(a)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 3.0), st.floats(-3.0, 3.0),
       st.floats(-3.0, 3.0))
def test_phase_rotation_covariance(m, n, beta, gamma, delta):
    q = m + n
    xi = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    ones = np.ones_like(xi)
    a = np.abs(eval_superposition_polar(SuperpositionSpec(m, n, beta, gamma), ones, xi)) ** 2
    b = np.abs(eval_superposition_polar(SuperpositionSpec(m, n, beta, gamma + delta), ones,
                                        xi - delta / q)) ** 2
    assert b == pytest.approx(a, abs=1e-9 * a.max())


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_constant_radial_factor_scales_density(c):
    g = kgrid(32)
    base = eval_superposition(SuperpositionSpec(2, 1, 1.5, 0.3, RadialProfile.constant(1.0)), g)
    scaled = ComplexField2D(g, c * base.values)
    assert np.abs(scaled.values) ** 2 == pytest.approx(abs(c) ** 2 * np.abs(base.values) ** 2,
                                                       rel=1e-12, abs=1e-300)


def test_l2_normalize():
    g = kgrid(64)
    psi = eval_superposition(SuperpositionSpec(1, 0, 1.0, 0.0, RadialProfile.gaussian(0.5, 0.2)),
                             g)
    assert psi.normalized().l2_norm() == pytest.approx(1.0, rel=1e-12)


def test_bilinear_sampling_exact_on_linear_function():
    g = kgrid(64)
    X, Y = g.mesh()
    f = 3 * X - 2 * Y + 1
    pts = np.array([[0.013, -0.57], [1.1, 0.42]])
    assert bilinear_sample(f, g, pts[:, 0], pts[:, 1]) == pytest.approx(
        3 * pts[:, 0] - 2 * pts[:, 1] + 1, abs=1e-12)
    with pytest.raises(ValueError):
        bilinear_sample(f, g, np.array([5.0]), np.array([0.0]))
    xi, v = sample_ring(ScalarField2D(g, f), 0.5, 32)
    assert v == pytest.approx(3 * 0.5 * np.cos(xi) - 2 * 0.5 * np.sin(xi) + 1, abs=1e-12)


def test_cubic_grid_shape():
    g = make_cubic_grid(32, 0.5)
    assert g.shape == (32, 32, 32) and g.unit_tag == ATOMIC_UNITS
    assert g.slice_grid().shape == (32, 32)
