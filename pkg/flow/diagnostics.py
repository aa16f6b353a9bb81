"""Consistency checks of the flow against its evolution identities."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from bundle.connection import chern_connection, curvature
from bundle.dolbeault import MetricData
from config import config
from flow.family_flow import FlowProblem, FlowSettings, FlowState, P_op, flow_step
from flow.monitors import eta, interior_mask
from geometry.calculus import fibre_integral
from moment_map.nu import nu
from utils.numerics import dagger, expm_herm, sup_norm, trace


def family_he_residual(problem: FlowProblem, sigma: np.ndarray) -> float:
    """sup_B |p(i Lambda_H F) - i lambda nu|, i.e. |P(sigma)| on interior nodes."""
    value = P_op(problem, sigma)
    mask = interior_mask(problem.grid) if problem.is_dirichlet else np.ones(problem.grid.base_size, bool)
    return sup_norm(value[mask])


def linearised_P(problem: FlowProblem, tau: np.ndarray, eps: float = 1e-4,
                 sigma: Optional[np.ndarray] = None) -> np.ndarray:
    """Central difference of P along sigma exp(+-eps tau); sigma defaults to id."""
    if sigma is None:
        plus, minus = expm_herm(eps * tau), expm_herm(-eps * tau)
    else:
        plus, minus = sigma @ expm_herm(eps * tau), sigma @ expm_herm(-eps * tau)
    return (P_op(problem, plus) - P_op(problem, minus)) / (2.0 * eps)


def curvature_evolution_residual(problem: FlowProblem, state: FlowState, dt: float) -> float:
    """sup |(F(t0 + dt) - F(t0))/dt + 2 nabla^{0,1} nabla^{1,0} P| over all (1,1) components."""
    grid = problem.grid
    h0 = problem.metric(state.sigma)
    p_value = P_op(problem, state.sigma)
    later = flow_step(problem, state, dt, "rk4", p_value)
    f0 = curvature(h0, problem.d0, with_f02=False)
    f1 = curvature(problem.metric(later.sigma), problem.d0, with_f02=False)

    conn = chern_connection(h0, problem.d0)
    p_field = np.array(problem.frame.broadcast(p_value))
    t_z = conn.covariant_derivative(p_field, "z")
    t_w = conn.covariant_derivative(p_field, "w")
    # -2 nabla^{0,1}(t_z dz + t_w dw), stored as coefficients of dz^dzbar, dz^dwbar, dw^dzbar, dw^dwbar
    expected = {
        "zz": 2.0 * conn.covariant_derivative(t_z, "zbar"),
        "zw": 2.0 * conn.covariant_derivative(t_z, "wbar"),
        "wz": 2.0 * conn.covariant_derivative(t_w, "zbar"),
        "ww": 2.0 * conn.covariant_derivative(t_w, "wbar"),
    }
    mask = interior_mask(grid, 2) if grid.is_annulus else np.ones(grid.base_size, bool)
    worst = 0.0
    for name, value in expected.items():
        diff = (f1.component(name) - f0.component(name)) / dt - value
        worst = max(worst, sup_norm(diff[:, :, mask]))
    return worst


def moment_map_evolution_residual(problem: FlowProblem, dt: float) -> Dict[str, float]:
    """Compare Re int_X tr(P i d_t nu) with |[P, a]|^2 at sigma = id by a forward difference.

    |[P, a]|^2 is Omega([P,a], i[P,a]) = 4 int_X tr([P,a_V][P,a_V]^dagger), the L^2 norm
    of the real 1-form attached to [P, a_V] dzbar.
    """
    grid = problem.grid
    r = problem.rank
    identity = np.broadcast_to(np.eye(r, dtype=complex), grid.base_size + (r, r)).copy()
    start = FlowState(np.zeros_like(identity))
    p_value = P_op(problem, identity)
    later = flow_step(problem, start, dt, "rk4", p_value)
    h_id = MetricData.from_base(grid, identity)
    nu0 = nu(h_id, problem.frame, problem.deformation).matrices
    nu1 = nu(problem.metric(later.sigma), problem.frame, problem.deformation).matrices
    lhs = np.real(trace(p_value @ (1j * (nu1 - nu0) / dt)))
    bracket = problem.frame.broadcast(p_value) @ problem.deformation.a_v \
        - problem.deformation.a_v @ problem.frame.broadcast(p_value)
    rhs = 4.0 * np.real(fibre_integral(trace(bracket @ dagger(bracket)), grid))
    return {"lhs": float(np.max(lhs)), "rhs": float(np.max(rhs)), "residual": sup_norm(lhs - rhs)}


@dataclass
class UniquenessReport:
    times: List[float] = field(default_factory=list)
    sup_eta: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def non_increasing(self) -> bool:
        return not self.failures


def uniqueness_run(problem: FlowProblem, first: FlowState, second: FlowState,
                   settings: FlowSettings, steps: int) -> UniquenessReport:
    """Evolve two initial states side by side and track sup_B eta(sigma(t), tau(t))."""
    report = UniquenessReport()
    a, b = first.copy(), second.copy()
    mask = interior_mask(problem.grid) if problem.is_dirichlet else np.ones(problem.grid.base_size, bool)
    for n in range(steps + 1):
        value = float(np.max(eta(a.sigma, b.sigma)[mask]))
        if report.sup_eta and value > report.sup_eta[-1] + config.monotone_tol * (1.0 + report.sup_eta[-1]):
            report.failures.append(f"sup eta increased at step {n}: {report.sup_eta[-1]:.6e} -> {value:.6e}")
        report.times.append(n * settings.dt)
        report.sup_eta.append(value)
        if n < steps:
            a = flow_step(problem, a, settings.dt, settings.scheme, c_stab=settings.c_stab)
            b = flow_step(problem, b, settings.dt, settings.scheme, c_stab=settings.c_stab)
    return report
