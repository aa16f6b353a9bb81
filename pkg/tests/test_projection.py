import numpy as np
import pytest

from bundle.dolbeault import DolbeaultData, MetricData
from bundle.presets import NILPOTENT, make_deformation
from geometry.calculus import complex_derivative
from projection.distance import cone_inner_product, geodesic, geodesic_speed, homogeneous_distance
from projection.frames import holo_frame
from projection.projections import SectionF, decompose, h_F, moments, nabla_F, p, pi, split_hs
from utils.errors import ShapeError
from utils.numerics import dagger, expm_herm, sqrtm_pos, sup_norm, trace


@pytest.fixture
def metric(torus, base_sigma):
    return MetricData.from_base(torus, base_sigma(torus))


def test_trivial_frame_is_all_of_end_e(torus):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    assert fr.dim == 4


def test_nilpotent_frame_is_the_commutant(small_torus):
    fr = holo_frame(make_deformation(small_torus, "nilpotent_constant"))
    assert fr.dim == 2
    for e in fr.basis[0, 0]:
        assert np.max(np.abs(e @ NILPOTENT - NILPOTENT @ e)) < 1e-8


def test_projection_is_idempotent(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    once = pi(metric, fr, band_limited(torus))
    twice = pi(metric, fr, once)
    assert sup_norm(once.coeffs - twice.coeffs) < 1e-10


def test_real_and_complex_pairings_agree(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    f = band_limited(torus)
    assert sup_norm(pi(metric, fr, f).coeffs - pi(metric, fr, f, pairing="complex").coeffs) < 1e-10


def test_unknown_pairing(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    with pytest.raises(ShapeError):
        pi(metric, fr, band_limited(torus), pairing="quaternionic")


def test_trace_free_part(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    assert sup_norm(trace(p(metric, fr, band_limited(torus)).matrices())) < 1e-10


def test_decomposition_reconstructs_and_is_orthogonal(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    f = band_limited(torus)
    psi_b, psi_h, psi_r = decompose(metric, fr, f)
    rebuilt = np.broadcast_to(psi_b, torus.shape)[..., None, None] * np.eye(2) + psi_h.field() + psi_r
    assert sup_norm(rebuilt - f) < 1e-10
    assert sup_norm(moments(metric, fr, psi_r)) < 1e-10
    assert sup_norm(trace(psi_h.matrices())) < 1e-10


def test_hermitian_skew_split(torus, band_limited):
    h = MetricData.identity(torus, 2)
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    f = band_limited(torus)
    herm, skew = split_hs(h, fr, f)
    assert sup_norm(herm.matrices() - dagger(herm.matrices())) < 1e-10
    assert sup_norm(skew.matrices() + dagger(skew.matrices())) < 1e-10
    assert sup_norm((herm + skew).coeffs - pi(h, fr, f).coeffs) < 1e-10


def test_induced_hermitian_form_is_positive(torus, metric, band_limited):
    f = band_limited(torus)
    values = h_F(metric, holo_frame(DolbeaultData.trivial(torus, 2)), f, f)
    assert np.all(np.real(values) > 0.0)
    assert np.max(np.abs(np.imag(values))) < 1e-10


def test_geodesic_distance_is_speed_times_time(torus, rng):
    sigma = np.broadcast_to(np.eye(2, dtype=complex), torus.base_size + (2, 2))
    tau = rng.standard_normal(torus.base_size + (2, 2))
    tau = 0.3 * (tau + np.swapaxes(tau, -1, -2))
    end = geodesic(sigma, tau, 1.5)
    assert np.allclose(end, expm_herm(1.5 * tau))
    assert homogeneous_distance(sigma, end, torus) == pytest.approx(1.5 * geodesic_speed(tau, torus), rel=1e-10)


def test_cone_metric_at_identity_is_frobenius(torus, rng):
    sigma = np.broadcast_to(np.eye(2, dtype=complex), torus.base_size + (2, 2))
    u = rng.standard_normal(torus.base_size + (2, 2))
    u = u + np.swapaxes(u, -1, -2)
    expected = float(np.real(np.tensordot(torus.base_weights, trace(u @ u), axes=([0, 1], [0, 1]))))
    assert cone_inner_product(sigma, u, u, torus) == pytest.approx(expected)


def test_induced_connection_differentiates_frame_coefficients(torus):
    h = MetricData.identity(torus, 2)
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    y1, _ = torus.base_mesh()
    m = np.array([[1.0, 2.0], [0.5j, -1.0]])
    f = np.exp(2j * np.pi * y1)[..., None, None] * m
    s = pi(h, fr, np.broadcast_to(f, torus.shape[:2] + f.shape))
    ds = nabla_F(h, fr, s, "w")
    assert sup_norm(ds.matrices() - np.pi * 1j * f) < 1e-10
    assert sup_norm(nabla_F(h, fr, s, "wbar").matrices() - np.pi * 1j * f) < 1e-10
    with pytest.raises(ShapeError):
        nabla_F(h, fr, s, "z")


def base_coefficients(rng, grid, dim):
    """Frame coefficients with Fourier modes |m| <= 1, so products stay alias-free."""
    y1, y2 = grid.base_mesh()
    out = np.zeros(grid.base_size + (dim,), dtype=complex)
    for m1, m2 in ((0, 0), (1, 0), (0, 1), (1, 1), (1, -1)):
        amplitude = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        out += np.exp(2j * np.pi * (m1 * y1 + m2 * y2))[..., None] * amplitude
    return out


def test_projection_is_self_adjoint_for_a_fibre_varying_metric(torus, band_limited):
    h = MetricData(torus, expm_herm(band_limited(torus, hermitian=True, amplitude=0.3)))
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    f, g = band_limited(torus), band_limited(torus)
    lhs = h_F(h, fr, pi(h, fr, f), g)
    rhs = h_F(h, fr, f, pi(h, fr, g))
    assert sup_norm(lhs - rhs) <= 1e-10 * max(1.0, sup_norm(lhs))
    once = pi(h, fr, f)
    assert sup_norm(pi(h, fr, once).coeffs - once.coeffs) < 1e-10


def test_projection_conjugation_rule(torus, base_sigma, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    sigma = base_sigma(torus)
    root = sqrtm_pos(sigma)
    root_inv = np.linalg.inv(root)
    alpha = band_limited(torus)
    lhs = pi(MetricData.from_base(torus, sigma), fr, alpha).matrices()
    rhs = root_inv @ pi(MetricData.identity(torus, 2), fr, root @ alpha @ root_inv).matrices() @ root
    assert sup_norm(lhs - rhs) < 1e-9


def test_projection_keeps_h_hermitian_fields_hermitian(torus, metric, band_limited):
    fr = holo_frame(DolbeaultData.trivial(torus, 2))
    alpha = metric.inverse() @ band_limited(torus, hermitian=True)
    lowered = metric.base_sigma @ pi(metric, fr, alpha).matrices()
    assert sup_norm(lowered - dagger(lowered)) < 1e-10
    _, skew = split_hs(metric, fr, alpha)
    assert sup_norm(skew.coeffs) < 1e-10


def test_induced_connection_is_metric_compatible(torus, rng):
    h = MetricData.identity(torus, 2)
    fr = holo_frame(make_deformation(torus, "nilpotent_constant", coupling=0.7))
    assert fr.dim == 2
    s = SectionF(fr, base_coefficients(rng, torus, fr.dim))
    t = SectionF(fr, base_coefficients(rng, torus, fr.dim))
    lhs = complex_derivative(h_F(h, fr, s, t), torus, "w", base_only=True)
    rhs = h_F(h, fr, nabla_F(h, fr, s, "w"), t) + h_F(h, fr, s, nabla_F(h, fr, t, "wbar"))
    assert sup_norm(lhs - rhs) <= 1e-9 * max(1.0, sup_norm(lhs))


def test_distance_along_a_geodesic_from_a_general_metric(torus, base_sigma, rng):
    sigma1 = base_sigma(torus)
    u = rng.standard_normal(torus.base_size + (2, 2)) + 1j * rng.standard_normal(torus.base_size + (2, 2))
    tau = np.linalg.solve(sigma1, 0.2 * (u + dagger(u)))
    sigma2 = geodesic(sigma1, tau, 0.8)
    assert sup_norm(sigma2 - dagger(sigma2)) < 1e-12
    distance = homogeneous_distance(sigma1, sigma2, torus)
    assert distance == pytest.approx(0.8 * geodesic_speed(tau, torus), rel=1e-9)
