import numpy as np
import pytest

from bundle.dolbeault import DolbeaultData
from bundle.presets import TRACE_FREE_DIAGONAL, make_deformation
from config import config
from flow.diagnostics import (
    curvature_evolution_residual,
    family_he_residual,
    linearised_P,
    moment_map_evolution_residual,
    uniqueness_run,
)
from flow.dirichlet import dirichlet_eigenvalue, dirichlet_eigenvalue_sparse, dirichlet_solve, tail_fit
from flow.family_flow import FlowProblem, FlowSettings, FlowState, P_op, flow_run, flow_step, max_stable_dt
from flow.monitors import eta, subsolution_defect, theta
from geometry.fields import random_field
from geometry.grid import ProductGrid
from moment_map.nu import DeformationData
from projection.frames import holo_frame
from utils.errors import ConfigurationError


def make_problem(grid, preset="diagonal_zero", lam=1.0, boundary_u=None):
    frame = holo_frame(DolbeaultData.trivial(grid, 2))
    a = None if preset == "diagonal_zero" else DeformationData.from_dolbeault(make_deformation(grid, preset))
    return FlowProblem(frame, a, lam, boundary_u)


def trace_free_u(rng, grid, amplitude=0.2):
    u = random_field(rng, grid, 2, hermitian=True, amplitude=amplitude, fibre_constant=True)[0, 0]
    return u - (np.trace(u, axis1=-2, axis2=-1) / 2)[..., None, None] * np.eye(2)


def stable_dt(grid):
    return 0.5 * config.c_stab / grid.spectral_radius("H")


def test_problem_validation(torus):
    frame = holo_frame(DolbeaultData.trivial(torus, 2))
    with pytest.raises(ConfigurationError):
        FlowProblem(frame, None, -1.0)
    with pytest.raises(ConfigurationError):
        FlowProblem(frame, None, 1.0, np.zeros(torus.base_size + (2, 2)))


@pytest.mark.parametrize("kwargs", [{"scheme": "euler"}, {"dt": 0.0}])
def test_settings_validation(kwargs):
    with pytest.raises(ConfigurationError):
        FlowSettings(**kwargs)


def test_rk4_rejects_steps_above_the_stability_bound(torus):
    problem = make_problem(torus)
    state = FlowState(np.zeros(torus.base_size + (2, 2), dtype=complex))
    with pytest.raises(ConfigurationError):
        flow_step(problem, state, 2.0 * max_stable_dt(torus))


def test_identity_is_stationary_without_deformation(torus):
    problem = make_problem(torus)
    identity = np.broadcast_to(np.eye(2, dtype=complex), torus.base_size + (2, 2)).copy()
    assert family_he_residual(problem, identity) < 1e-12


def test_linearisation_at_identity_is_half_the_base_laplacian(torus):
    y1, _ = torus.base_mesh()
    tau = np.cos(2.0 * np.pi * y1)[..., None, None] * TRACE_FREE_DIAGONAL
    value = linearised_P(make_problem(torus), tau)
    assert np.max(np.abs(value - 2.0 * np.pi ** 2 * tau)) < 1e-6


@pytest.mark.slow
def test_flat_flow_is_the_heat_equation(torus):
    y1, _ = torus.base_mesh()
    amplitude = 1e-3
    u0 = (amplitude * np.cos(2.0 * np.pi * y1))[..., None, None] * TRACE_FREE_DIAGONAL
    report = flow_run(make_problem(torus), FlowState(u0), FlowSettings(dt=1e-4, t_end=1e-2, tol=1e-300))
    final = np.real(report.final_state.u[0, 0, 0, 0])
    rate = -np.log(final / amplitude) / report.final_state.t
    assert rate == pytest.approx(4.0 * np.pi ** 2, rel=5e-3)


def test_base_constant_nilpotent_follows_the_closed_form(small_torus):
    problem = make_problem(small_torus, "nilpotent_constant", lam=1.0)
    state = FlowState(np.zeros(small_torus.base_size + (2, 2), dtype=complex))
    for _ in range(100):
        state = flow_step(problem, state, 1e-4)
        phi = np.real(state.u[0, 0, 0, 0])
        assert phi == pytest.approx(-0.5 * np.log(1.0 + 8.0 * state.t), rel=1e-5)
    assert np.max(np.abs(state.u - state.u[0, 0])) < 1e-12


@pytest.mark.slow
def test_flat_flow_is_monotone_and_keeps_the_determinant(torus, rng):
    dt = stable_dt(torus)
    report = flow_run(make_problem(torus), FlowState(trace_free_u(rng, torus)),
                      FlowSettings(dt=dt, t_end=100 * dt, tol=1e-300, snapshot_every=1))
    assert report.failures == []
    assert max(report.det_drift) <= 1e-8
    assert report.sup_theta[-1] < report.sup_theta[0]
    assert len(report.timeseries_rows()) == len(report.times)


@pytest.mark.slow
def test_theta_is_a_heat_subsolution(torus, rng):
    dt = stable_dt(torus)
    report = flow_run(make_problem(torus, "nilpotent_constant"), FlowState(trace_free_u(rng, torus)),
                      FlowSettings(dt=dt, t_end=100 * dt, tol=1e-300, snapshot_every=1))
    assert report.subsolution_defect <= 1e-5
    assert report.failures == []


def test_subsolution_needs_uniform_snapshots(torus):
    snapshots = [np.zeros(torus.base_size)] * 3
    with pytest.raises(ConfigurationError):
        subsolution_defect(snapshots, [0.0, 0.1, 0.3], torus)


@pytest.mark.slow
def test_two_solutions_approach_each_other(torus, rng):
    problem = make_problem(torus, "nilpotent_constant")
    first, second = FlowState(trace_free_u(rng, torus)), FlowState(trace_free_u(rng, torus))
    report = uniqueness_run(problem, first, second, FlowSettings(dt=stable_dt(torus)), steps=50)
    assert report.non_increasing
    assert report.sup_eta[-1] < report.sup_eta[0]


def test_eta_vanishes_only_on_the_diagonal(torus, rng):
    sigma = np.broadcast_to(np.eye(2, dtype=complex), torus.base_size + (2, 2))
    assert np.max(np.abs(eta(sigma, sigma))) < 1e-12
    other = FlowState(trace_free_u(rng, torus)).sigma
    assert np.min(eta(sigma, other)) >= -1e-12
    assert np.max(eta(sigma, other)) > 0.0


def test_eta_of_a_diagonal_pair():
    sigma = np.eye(2, dtype=complex)
    tau = np.diag([np.e, 1.0 / np.e]).astype(complex)
    assert eta(sigma, tau) == pytest.approx(2.0 * (np.e + 1.0 / np.e - 2.0), rel=1e-12)
    assert eta(tau, sigma) == pytest.approx(eta(sigma, tau), rel=1e-12)


def test_theta_at_the_constant_nilpotent(small_torus):
    identity = np.broadcast_to(np.eye(2, dtype=complex), small_torus.base_size + (2, 2)).copy()
    value = theta(P_op(make_problem(small_torus, "nilpotent_constant", lam=1.0), identity))
    assert np.max(np.abs(value - 8.0)) < 1e-10


def test_moment_map_evolution_at_the_constant_nilpotent(small_torus):
    values = moment_map_evolution_residual(make_problem(small_torus, "nilpotent_constant"), 1e-6)
    assert values["rhs"] == pytest.approx(64.0)
    assert values["residual"] <= 1e-3 * values["rhs"]


def test_curvature_evolution_is_first_order_in_dt(torus):
    y1, _ = torus.base_mesh()
    problem = make_problem(torus)
    state = FlowState((0.1 * np.cos(2.0 * np.pi * y1))[..., None, None] * TRACE_FREE_DIAGONAL)
    coarse = curvature_evolution_residual(problem, state, 1e-4)
    fine = curvature_evolution_residual(problem, state, 5e-5)
    assert coarse / fine == pytest.approx(2.0, rel=0.1)


@pytest.fixture
def dirichlet_grid():
    return ProductGrid(4, "annulus", (4, 9))


def test_dirichlet_eigenvalue_solvers_agree(dirichlet_grid):
    dense = dirichlet_eigenvalue(dirichlet_grid)
    assert dense == pytest.approx(dirichlet_eigenvalue_sparse(dirichlet_grid), rel=1e-8)
    assert dense == pytest.approx(np.pi ** 2, rel=3e-2)
    with pytest.raises(ConfigurationError):
        dirichlet_eigenvalue(ProductGrid(4, "torus", (4, 4)))


def test_boundary_mismatch_is_rejected(dirichlet_grid):
    problem = make_problem(dirichlet_grid, boundary_u=np.zeros(dirichlet_grid.base_size + (2, 2), dtype=complex))
    u0 = 0.1 * np.ones(dirichlet_grid.base_size)[..., None, None] * TRACE_FREE_DIAGONAL
    with pytest.raises(ConfigurationError):
        dirichlet_solve(problem, FlowState(u0), FlowSettings(dt=1e-3, scheme="semi_implicit"))


@pytest.mark.slow
def test_dirichlet_decay_rate_is_twice_the_first_eigenvalue(dirichlet_grid):
    _, y2 = dirichlet_grid.base_mesh()
    u0 = (0.1 * np.sin(np.pi * y2))[..., None, None] * TRACE_FREE_DIAGONAL
    problem = make_problem(dirichlet_grid, boundary_u=u0.copy())
    result = dirichlet_solve(problem, FlowState(u0),
                             FlowSettings(dt=1e-3, t_end=0.6, tol=1e-300, scheme="semi_implicit"))
    mask = dirichlet_grid.boundary_mask()
    assert np.max(np.abs(result.report.final_state.u[mask])) < 1e-12
    assert result.mu == pytest.approx(2.0 * dirichlet_eigenvalue(dirichlet_grid), rel=0.05)
    assert result.r2 > 0.999


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["annulus_mixed", "nilpotent_holomorphic"])
def test_dirichlet_problem_converges_with_a_deformation(preset):
    grid = ProductGrid(8, "annulus", (8, 8))
    identity = np.zeros(grid.base_size + (2, 2), dtype=complex)
    problem = make_problem(grid, preset, lam=0.5, boundary_u=identity)
    result = dirichlet_solve(problem, FlowState(identity.copy()),
                             FlowSettings(dt=1e-3, t_end=5.0, tol=1e-8, scheme="semi_implicit"))
    report = result.report
    assert report.converged
    assert report.failures == []
    assert report.residual[-1] < 1e-8
    assert np.max(np.abs(report.final_state.u[grid.boundary_mask()])) < 1e-12
    assert report.residual[0] > 1e-2


def test_tail_fit_recovers_an_exponential():
    t = np.linspace(0.0, 1.0, 101)
    fit = tail_fit(t, 3.0 * np.exp(-12.0 * t))
    assert fit["mu"] == pytest.approx(12.0, rel=1e-8)
    assert fit["C"] == pytest.approx(3.0, rel=1e-6)
    assert tail_fit(t[:2], [1.0, 0.5]) is None


def test_P_is_trace_free(torus, rng):
    problem = make_problem(torus, "nilpotent_constant")
    value = P_op(problem, FlowState(trace_free_u(rng, torus)).sigma)
    assert np.max(np.abs(np.trace(value, axis1=-2, axis2=-1))) < 1e-9
