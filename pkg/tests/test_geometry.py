import numpy as np
import pytest

from geometry.calculus import (axis_derivative, complex_derivative, contract, deriv, fibre_integral, lp_norm,
                               total_integral)
from geometry.fields import MatrixField, TwoForm, kahler_form
from geometry.grid import ProductGrid, fourier_wavenumbers
from utils.errors import ConfigurationError, ShapeError


@pytest.mark.parametrize("kwargs", [
    {"fibre_size": 5},
    {"fibre_size": 2},
    {"fibre_size": 8, "base_size": (6, 4), "base_kind": "annulus"},
    {"fibre_size": 8, "base_kind": "sphere"},
    {"fibre_size": 8, "k": 0.0},
])
def test_invalid_grids_are_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        ProductGrid(**kwargs)


def test_nyquist_mode_is_zeroed():
    k = fourier_wavenumbers(8)
    assert k[4] == 0.0
    assert np.isclose(np.max(np.abs(k)), 2.0 * np.pi * 3)


def test_spectral_derivative_is_exact_on_band_limited_data(torus):
    x1, x2, y1, y2 = torus.mesh()
    f = np.sin(2.0 * np.pi * x1) * np.cos(4.0 * np.pi * y2)
    df = axis_derivative(f, torus, "x1")
    assert np.max(np.abs(df - 2.0 * np.pi * np.cos(2.0 * np.pi * x1) * np.cos(4.0 * np.pi * y2))) < 1e-10


def test_complex_derivatives_follow_the_wirtinger_convention(torus):
    x1, x2, _, _ = torus.mesh()
    f = np.exp(2j * np.pi * x1)
    assert np.max(np.abs(complex_derivative(f, torus, "z") - np.pi * 1j * f)) < 1e-10
    assert np.max(np.abs(complex_derivative(f, torus, "zbar") - np.pi * 1j * f)) < 1e-10
    g = np.exp(2j * np.pi * x2)
    assert np.max(np.abs(complex_derivative(g, torus, "z") - np.pi * g)) < 1e-10
    assert np.max(np.abs(complex_derivative(g, torus, "zbar") + np.pi * g)) < 1e-10


def test_radial_stencil_is_exact_on_quartics(annulus):
    _, _, _, y2 = annulus.mesh()
    df = axis_derivative(y2 ** 4, annulus, "y2")
    assert np.max(np.abs(df - 4.0 * y2 ** 3)) < 1e-9


def test_annulus_holomorphic_exponential_converges_at_fourth_order(annulus):
    _, _, y1, y2 = annulus.mesh()
    f = np.exp(2j * np.pi * (y1 + 1j * y2))
    fine = ProductGrid(4, "annulus", (8, 33))
    _, _, y1, y2 = fine.mesh()
    g = np.exp(2j * np.pi * (y1 + 1j * y2))
    assert np.max(np.abs(complex_derivative(g, fine, "wbar"))) < np.max(np.abs(complex_derivative(f, annulus, "wbar"))) / 8


def test_base_laplacian_matches_the_field_calculus(torus, rng):
    values = rng.standard_normal(torus.base_size)
    flat = torus.base_laplacian() @ values.ravel()
    direct = -sum(axis_derivative(axis_derivative(values, torus, n, a), torus, n, a)
                  for n, a in (("y1", 0), ("y2", 1)))
    assert np.max(np.abs(flat.reshape(torus.base_size) - np.real(direct))) < 1e-9


def test_spectral_radius_bounds_the_laplacian(torus):
    lap = torus.base_laplacian().toarray()
    assert np.max(np.abs(np.linalg.eigvals(lap))) <= 2.0 * torus.spectral_radius("H") * (1 + 1e-12)


def test_contraction_convention_on_kahler_forms(torus):
    omega_x = kahler_form(torus, "X", rank=2)
    omega_b = kahler_form(torus, "B", rank=2)
    eye = np.eye(2)
    assert np.allclose(contract(omega_x, "V"), eye)
    assert np.allclose(contract(omega_b, "H"), eye)
    both = TwoForm(torus, zz=omega_x.zz, ww=omega_b.ww)
    assert np.allclose(contract(both, "k", 4.0), 1.25 * eye)


def test_lambda_k_is_vertical_plus_horizontal_over_k(torus, band_limited):
    form = TwoForm(torus, zz=band_limited(torus), zw=band_limited(torus), wz=band_limited(torus),
                   ww=band_limited(torus))
    for k in (2.0, 16.0, 128.0):
        lhs = contract(form, "k", k)
        rhs = contract(form, "V") + contract(form, "H") / k
        assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.max(np.abs(lhs)))


def test_missing_form_component_raises(torus):
    with pytest.raises(ShapeError):
        contract(TwoForm(torus), "V")


def test_integrals_have_unit_volume(torus, annulus):
    for grid in (torus, annulus):
        ones = np.ones(grid.shape)
        assert np.isclose(float(total_integral(ones, grid)), 1.0)
        assert np.allclose(fibre_integral(ones, grid), 1.0)


def test_field_shape_is_checked(torus):
    with pytest.raises(ShapeError):
        MatrixField(torus, np.zeros((2, 2)))


def test_lp_norm_of_identity(torus):
    field = MatrixField.identity(torus, 2)
    assert np.isclose(lp_norm(field, torus, k=1.0), np.sqrt(2.0))


def test_norms_scale_with_k(torus, band_limited):
    exponents = {"function": 1, "horizontal": 0, "vertical": 1}
    for _ in range(20):
        f = band_limited(torus)
        for kind, power in exponents.items():
            unit = lp_norm(f, torus, kind, k=1.0) ** 2
            for k in (2.0, 4.0, 8.0):
                assert lp_norm(f, torus, kind, k=k) ** 2 == pytest.approx(k ** power * unit, rel=1e-10)


def test_field_derivatives_commute_and_keep_the_degree(torus, band_limited):
    x1, _, _, _ = torus.mesh()
    field = MatrixField(torus, np.exp(2j * np.pi * x1)[..., None, None] * np.eye(2), "dzbar")
    dz = deriv(field, "z")
    assert dz.degree == "dzbar"
    assert np.max(np.abs(dz.data - np.pi * 1j * field.data)) < 1e-10
    assert np.max(np.abs(deriv(MatrixField.identity(torus, 2), "wbar").data)) < 1e-12

    f = MatrixField(torus, band_limited(torus))
    for a, b in (("z", "zbar"), ("z", "w"), ("w", "wbar")):
        assert np.max(np.abs(deriv(deriv(f, a), b).data - deriv(deriv(f, b), a).data)) < 1e-9
    with pytest.raises(ShapeError):
        deriv(f, "x")
