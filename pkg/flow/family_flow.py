"""The family Hermite-Einstein flow d sigma/dt = -2 sigma P(sigma).

The state is u = log sigma (fibre-constant, Hermitian), so positivity is
structural.  The right-hand side for u comes from the Daleckii-Krein formula
applied to d/dt exp(u) = -2 sigma P.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse import linalg as spla

from bundle.connection import contracted_curvature
from bundle.dolbeault import DolbeaultData, MetricData
from config import config
from flow.monitors import det_drift, interior_mask, subsolution_defect, theta
from geometry.grid import ProductGrid
from moment_map.nu import DeformationData, nu
from projection.frames import HoloFrame
from projection.projections import p
from utils.errors import BlowUpError, ConfigurationError
from utils.numerics import exp_derivative_inverse, expm_herm, hermitian_part, sup_norm

logger = logging.getLogger(__name__)

SCHEMES = ("rk4", "semi_implicit")


@dataclass
class FlowProblem:
    """Data of one family flow: central operator, deformation, coupling and boundary values."""

    frame: HoloFrame
    deformation: Optional[DeformationData] = None
    lam: float = 1.0
    boundary_u: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if self.boundary_u is not None and not self.grid.is_annulus:
            raise ConfigurationError("Dirichlet data needs an annulus base")

    @property
    def grid(self) -> ProductGrid:
        return self.frame.grid

    @property
    def d0(self) -> DolbeaultData:
        return self.frame.dolbeault

    @property
    def rank(self) -> int:
        return self.frame.rank

    @property
    def is_dirichlet(self) -> bool:
        return self.boundary_u is not None

    def metric(self, sigma: np.ndarray) -> MetricData:
        return MetricData.from_base(self.grid, sigma)


@dataclass
class FlowState:
    u: np.ndarray
    t: float = 0.0
    step: int = 0

    @property
    def sigma(self) -> np.ndarray:
        return expm_herm(self.u)

    def copy(self) -> "FlowState":
        return FlowState(self.u.copy(), self.t, self.step)


@dataclass
class FlowSettings:
    dt: float = 1e-3
    t_end: float = 0.1
    tol: float = field(default_factory=lambda: config.flow_tol)
    scheme: str = "rk4"
    max_steps: int = 100000
    snapshot_every: int = field(default_factory=lambda: config.snapshot_every)
    monotone_tol: float = field(default_factory=lambda: config.monotone_tol)
    c_stab: float = field(default_factory=lambda: config.c_stab)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")


def P_op(problem: FlowProblem, sigma: np.ndarray) -> np.ndarray:
    """P(sigma) = p_{h sigma}(i Lambda_H F_{h sigma}) - lambda i nu_{h sigma}(a), shape (Nb1, Nb2, r, r)."""
    h = problem.metric(sigma)
    value = p(h, problem.frame, contracted_curvature(h, problem.d0, "H")).matrices()
    if problem.deformation is not None and problem.lam != 0.0:
        value = value - problem.lam * nu(h, problem.frame, problem.deformation).i_nu
    return value


def flow_rhs(problem: FlowProblem, u: np.ndarray, p_value: Optional[np.ndarray] = None) -> np.ndarray:
    """du/dt for d exp(u)/dt = -2 sigma P; zero on Dirichlet rows."""
    sigma = expm_herm(u)
    p_value = P_op(problem, sigma) if p_value is None else p_value
    du = hermitian_part(exp_derivative_inverse(u, -2.0 * sigma @ p_value))
    if problem.is_dirichlet:
        du[problem.grid.boundary_mask()] = 0.0
    return du


def max_stable_dt(grid: ProductGrid, c_stab: Optional[float] = None) -> float:
    c_stab = config.c_stab if c_stab is None else c_stab
    return c_stab / grid.spectral_radius("H")


class SemiImplicitSolver:
    """Solves (I + dt K) u_new = rhs entrywise, K = -(d1^2 + d2^2) on the base.

    Torus bases use the FFT symbol; annulus bases factor the interior block
    with a sparse LU and keep boundary rows at their Dirichlet values.
    """

    def __init__(self, grid: ProductGrid, dt: float):
        self.grid = grid
        self.dt = dt
        self.laplacian = grid.base_laplacian()
        if grid.is_annulus:
            mask = grid.boundary_mask().ravel()
            self.interior = np.flatnonzero(~mask)
            self.boundary = np.flatnonzero(mask)
            n = self.laplacian.shape[0]
            system = (sp.identity(n) + dt * self.laplacian).tocsc()
            self.lu = spla.splu(system[self.interior][:, self.interior].tocsc())
            self.coupling = (dt * self.laplacian)[self.interior][:, self.boundary]
        else:
            k1 = grid.wavenumbers["y1"][:, None]
            k2 = grid.wavenumbers["y2"][None, :]
            self.symbol = 1.0 + dt * (k1 ** 2 + k2 ** 2)

    def apply_laplacian(self, u: np.ndarray) -> np.ndarray:
        flat = u.reshape(u.shape[0] * u.shape[1], -1)
        return (self.laplacian @ flat).reshape(u.shape)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if not self.grid.is_annulus:
            hat = np.fft.fft2(rhs, axes=(0, 1)) / self.symbol[..., None, None]
            return np.fft.ifft2(hat, axes=(0, 1))
        flat = rhs.reshape(rhs.shape[0] * rhs.shape[1], -1)
        out = flat.copy()
        b_values = flat[self.boundary]
        inner = flat[self.interior] - self.coupling @ b_values
        out[self.interior] = self.lu.solve(np.ascontiguousarray(inner.real)) + 1j * self.lu.solve(
            np.ascontiguousarray(inner.imag))
        return out.reshape(rhs.shape)


def _check_finite(u: np.ndarray, state: FlowState) -> None:
    if not np.all(np.isfinite(u)):
        raise BlowUpError(state.step + 1, state.t, "u became non-finite")


def flow_step(problem: FlowProblem, state: FlowState, dt: float, scheme: str = "rk4",
              p_value: Optional[np.ndarray] = None, solver: Optional[SemiImplicitSolver] = None,
              c_stab: Optional[float] = None) -> FlowState:
    """Advance u = log sigma by one step of size dt.

    Raises:
        ConfigurationError: for an unknown scheme or rk4 steps above the stability bound.
        BlowUpError: if the new state is not finite.
    """
    u = state.u
    if scheme == "rk4":
        limit = max_stable_dt(problem.grid, c_stab)
        if dt > limit * (1.0 + 1e-12):
            raise ConfigurationError(f"dt={dt:.3e} exceeds the rk4 stability bound {limit:.3e}")
        k1 = flow_rhs(problem, u, p_value)
        k2 = flow_rhs(problem, u + 0.5 * dt * k1)
        k3 = flow_rhs(problem, u + 0.5 * dt * k2)
        k4 = flow_rhs(problem, u + dt * k3)
        new_u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    elif scheme == "semi_implicit":
        solver = SemiImplicitSolver(problem.grid, dt) if solver is None else solver
        explicit = flow_rhs(problem, u, p_value) + solver.apply_laplacian(u)
        rhs = u + dt * explicit
        if problem.is_dirichlet:
            mask = problem.grid.boundary_mask()
            rhs[mask] = problem.boundary_u[mask]
        new_u = solver.solve(rhs)
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    new_u = hermitian_part(new_u)
    if problem.is_dirichlet:
        mask = problem.grid.boundary_mask()
        new_u[mask] = problem.boundary_u[mask]
    _check_finite(new_u, state)
    return FlowState(new_u, state.t + dt, state.step + 1)


@dataclass
class FlowReport:
    """Time series and terminal data of one flow run."""

    times: List[float] = field(default_factory=list)
    sup_theta: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    det_drift: List[float] = field(default_factory=list)
    snapshot_times: List[float] = field(default_factory=list)
    snapshots: List[np.ndarray] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    converged: bool = False
    subsolution_defect: Optional[float] = None
    fit: Optional[Dict[str, float]] = None
    final_state: Optional[FlowState] = None

    def timeseries_rows(self) -> List[Dict[str, float]]:
        return [{"t": t, "sup_theta": s, "residual": r, "det_drift": d}
                for t, s, r, d in zip(self.times, self.sup_theta, self.residual, self.det_drift)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": len(self.times) - 1,
            "t_final": self.times[-1] if self.times else 0.0,
            "sup_theta_initial": self.sup_theta[0] if self.sup_theta else None,
            "sup_theta_final": self.sup_theta[-1] if self.sup_theta else None,
            "residual_final": self.residual[-1] if self.residual else None,
            "max_det_drift": max(self.det_drift, default=0.0),
            "converged": self.converged,
            "failures": list(self.failures),
            "subsolution_defect": self.subsolution_defect,
            "fit": self.fit,
        }


def flow_run(problem: FlowProblem, initial: FlowState, settings: FlowSettings) -> FlowReport:
    """Integrate to t_end or until sup |P| < tol, recording every monitor.

    Monotonicity and convergence failures are recorded in the report, never raised.
    """
    report = FlowReport()
    mask = interior_mask(problem.grid) if problem.is_dirichlet else np.ones(problem.grid.base_size, bool)
    solver = SemiImplicitSolver(problem.grid, settings.dt) if settings.scheme == "semi_implicit" else None
    state = initial.copy()
    u0 = initial.u
    n_steps = min(int(np.ceil(settings.t_end / settings.dt - 1e-9)), settings.max_steps)

    while True:
        p_value = P_op(problem, state.sigma)
        th = theta(p_value)
        sup_th = float(np.max(th[mask]))
        resid = sup_norm(p_value[mask])
        if report.sup_theta and sup_th > report.sup_theta[-1] + settings.monotone_tol * (1.0 + report.sup_theta[-1]):
            message = (f"sup theta increased at step {state.step}: "
                       f"{report.sup_theta[-1]:.6e} -> {sup_th:.6e}")
            report.failures.append(message)
            logger.warning(message)
        report.times.append(state.step * settings.dt)
        report.sup_theta.append(sup_th)
        report.residual.append(resid)
        report.det_drift.append(det_drift(state.u, u0))
        if state.step % settings.snapshot_every == 0:
            report.snapshot_times.append(state.step * settings.dt)
            report.snapshots.append(th)
        logger.debug("step %d t=%.4g sup_theta=%.3e residual=%.3e", state.step, state.t, sup_th, resid)

        if resid < settings.tol:
            report.converged = True
            break
        if state.step >= n_steps:
            break
        state = flow_step(problem, state, settings.dt, settings.scheme, p_value, solver, settings.c_stab)

    report.final_state = state
    report.subsolution_defect = subsolution_defect(report.snapshots, report.snapshot_times, problem.grid)
    return report
