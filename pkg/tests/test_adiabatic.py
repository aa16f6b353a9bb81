import numpy as np
import pytest

from adiabatic.approximate import approx_solution_r2, exp_h_hermitian, solve_base_poisson
from adiabatic.donaldson import DonaldsonSettings, donaldson_dt, total_space_he_flow
from adiabatic.expansion import adiabatic_defect, adiabatic_sweep, check_k_list, coupling_parameter
from adiabatic.linearised import hermitian_commutant_dimension, l_operator
from bundle.dolbeault import DolbeaultData, MetricData, family_member
from bundle.presets import NILPOTENT, make_deformation
from geometry.grid import ProductGrid
from projection.frames import holo_frame
from utils.errors import AssumptionViolation, ConfigurationError, DomainError, ObstructionError
from utils.numerics import expm_herm

K_LIST = (16.0, 32.0, 64.0, 128.0)


@pytest.fixture
def fibre_varying_setup(torus):
    y1, _ = torus.base_mesh()
    h = MetricData.conformal(torus, 0.3 * np.cos(2.0 * np.pi * y1), 2)
    return h, DolbeaultData.trivial(torus, 2), make_deformation(torus, "fibre_varying")


def test_coupling_parameter():
    assert coupling_parameter(2.0, 8.0) == pytest.approx(0.5)
    with pytest.raises(ConfigurationError):
        coupling_parameter(-1.0, 8.0)
    with pytest.raises(ConfigurationError):
        coupling_parameter(1.0, 0.0)


@pytest.mark.parametrize("k_list", [(), (16.0, 8.0), (0.0, 1.0), (4.0, 4.0)])
def test_k_list_must_increase(k_list):
    with pytest.raises(ConfigurationError):
        check_k_list(k_list)


def test_zero_deformation_has_no_defect(torus):
    run = adiabatic_sweep(MetricData.identity(torus, 2), DolbeaultData.trivial(torus, 2),
                          make_deformation(torus, "diagonal_zero"), 1.0, K_LIST)
    assert max(run.defects) < 1e-13
    assert run.exact
    assert run.slope is None
    assert [row["k"] for row in run.rows()] == list(K_LIST)


def test_constant_nilpotent_expansion_is_exact(torus):
    defect = adiabatic_defect(MetricData.identity(torus, 2), DolbeaultData.trivial(torus, 2),
                              make_deformation(torus, "nilpotent_constant"), 1.0, 32.0)
    assert defect < 1e-12


@pytest.mark.slow
def test_mixed_annulus_defect_decays_at_three_halves(annulus):
    run = adiabatic_sweep(MetricData.identity(annulus, 2), DolbeaultData.trivial(annulus, 2),
                          make_deformation(annulus, "annulus_mixed"), 1.0, K_LIST)
    assert 1.45 <= run.slope <= 2.1


@pytest.mark.slow
def test_correctors_give_order_three_halves(fibre_varying_setup):
    h, d0, a = fibre_varying_setup
    solution = approx_solution_r2(h, d0, a, 1.0, K_LIST)
    assert solution.slope >= 1.45
    assert solution.ablations["skip_phi"].slope <= 1.05
    assert solution.ablations["skip_tau"].slope <= 1.05
    assert solution.gamma0 == pytest.approx(0.0, abs=1e-12)
    assert len(solution.rows()) == len(K_LIST)
    assert set(solution.rows()[0]) == {"k", "residual", "residual_skip_phi", "residual_skip_tau"}


def test_obstructed_metric_is_reported(torus):
    with pytest.raises(ObstructionError):
        approx_solution_r2(MetricData.identity(torus, 2), DolbeaultData.trivial(torus, 2),
                           make_deformation(torus, "nilpotent_constant"), 1.0, K_LIST, ablations=False)


def test_base_poisson_inverts_the_laplacian(torus):
    y1, y2 = torus.base_mesh()
    rhs = np.cos(2.0 * np.pi * y1) * np.sin(2.0 * np.pi * y2)
    phi = solve_base_poisson(torus, rhs)
    # K phi = rhs with K = -(d1^2 + d2^2), eigenvalue 8 pi^2 on this mode
    assert np.max(np.abs(phi - rhs / (8.0 * np.pi ** 2))) < 1e-10


def test_h_exponential(torus, base_sigma, band_limited):
    h = MetricData.from_base(torus, base_sigma(torus))
    assert np.max(np.abs(exp_h_hermitian(h, np.zeros_like(h.sigma)) - np.eye(2))) < 1e-12
    x = band_limited(torus, hermitian=True, amplitude=0.3)
    flat = MetricData.identity(torus, 2)
    assert np.max(np.abs(exp_h_hermitian(flat, x) - expm_herm(x))) < 1e-12


def test_l_kernel_is_the_hermitian_commutant(small_torus):
    h = MetricData.identity(small_torus, 2)
    fr = holo_frame(DolbeaultData.trivial(small_torus, 2))
    for preset, expected in (("diagonal_zero", 3), ("nilpotent_constant", 0)):
        a = make_deformation(small_torus, preset)
        op = l_operator(h, fr, a)
        assert op.kernel_dim == expected == hermitian_commutant_dimension(a.a_v)
        assert op.symmetry_defect <= 1e-10
        assert op.min_eigenvalue >= -1e-8


def test_l_kernel_vanishes_for_the_mixed_annulus_deformation():
    grid = ProductGrid(4, "annulus", (4, 5))
    h = MetricData.identity(grid, 2)
    a = make_deformation(grid, "annulus_mixed")
    op = l_operator(h, holo_frame(DolbeaultData.trivial(grid, 2)), a)
    assert op.kernel_dim == 0 == hermitian_commutant_dimension(a.a_v)
    assert op.symmetry_defect <= 1e-10
    assert op.min_eigenvalue > 1e-6


def test_l_needs_a_vertically_trivial_centre(small_torus):
    d0 = make_deformation(small_torus, "nilpotent_constant")
    with pytest.raises(AssumptionViolation):
        l_operator(MetricData.identity(small_torus, 2), holo_frame(d0), d0)


def test_hermitian_commutant_of_nilpotent_is_trivial():
    assert hermitian_commutant_dimension(np.ones((2, 2, 1, 1, 2, 2)) * NILPOTENT) == 0


def test_donaldson_dt_is_capped(torus):
    h = MetricData.identity(torus, 2)
    assert donaldson_dt(h, 64.0, 1.0) < 1.0
    assert donaldson_dt(h, 64.0, 1e-9) == 1e-9


def test_donaldson_flow_rejects_non_integrable_data(torus):
    ones = np.ones(torus.shape)[..., None, None]
    d = DolbeaultData(torus, ones * NILPOTENT, ones * NILPOTENT.T)
    with pytest.raises(DomainError):
        total_space_he_flow(MetricData.identity(torus, 2), d, 16.0, DonaldsonSettings())


@pytest.mark.slow
def test_corrected_metric_starts_closer_to_the_hym_metric(fibre_varying_setup, torus):
    _, d0, a = fibre_varying_setup
    h = MetricData.identity(torus, 2)
    k = 64.0
    solution = approx_solution_r2(h, d0, a, 1.0, (k / 2, k), ablations=False)
    d = family_member(d0, a, coupling_parameter(1.0, k))
    corrected = MetricData(torus, exp_h_hermitian(h, 2.0 * solution.tau2 / k))
    dt = donaldson_dt(h, k, 1.0)
    settings = DonaldsonSettings(dt=dt, t_end=3 * dt)
    plain = total_space_he_flow(h, d, k, settings)
    better = total_space_he_flow(corrected, d, k, settings)
    assert better.final_residual < plain.final_residual
    assert len(plain.times) == 4
