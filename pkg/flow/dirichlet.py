"""Dirichlet problem for the family flow on an annulus base."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse.linalg as spla

from flow.family_flow import FlowProblem, FlowReport, FlowSettings, FlowState, flow_run
from geometry.grid import ProductGrid
from utils.errors import ConfigurationError
from utils.numerics import exponential_fit, sup_norm

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12
TAIL_RATIO = 1e-2
TAIL_FRACTION = 0.5


@dataclass
class DirichletResult:
    sigma_inf: np.ndarray
    c: Optional[float]
    mu: Optional[float]
    r2: Optional[float]
    report: FlowReport

    def to_dict(self) -> Dict[str, Any]:
        data = self.report.to_dict()
        data.update({"fit_C": self.c, "fit_mu": self.mu, "fit_r2": self.r2})
        return data


def dirichlet_eigenvalue(grid: ProductGrid) -> float:
    """Smallest eigenvalue of -(d1^2 + d2^2) with zero data on both radial ends."""
    if not grid.is_annulus:
        raise ConfigurationError("Dirichlet eigenvalues need an annulus base")
    interior = np.flatnonzero(~grid.boundary_mask().ravel())
    block = grid.base_laplacian()[interior][:, interior].toarray()
    # the one-sided boundary stencils make the block non-symmetric
    return float(np.min(np.real(np.linalg.eigvals(block))))


def dirichlet_eigenvalue_sparse(grid: ProductGrid) -> float:
    """Same eigenvalue by shift-invert Arnoldi; used for larger radial grids."""
    interior = np.flatnonzero(~grid.boundary_mask().ravel())
    block = grid.base_laplacian()[interior][:, interior].tocsc()
    vals = spla.eigs(block, k=1, sigma=0.0, which="LM", return_eigenvectors=False)
    return float(np.real(vals[0]))


def tail_fit(times, sup_theta) -> Optional[Dict[str, float]]:
    """Fit sup theta ~ C exp(-mu t) on the last half of samples below 1e-2 theta(0)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(sup_theta, dtype=float)
    if values.size == 0 or values[0] <= 0.0:
        return None
    keep = np.flatnonzero((values < TAIL_RATIO * values[0]) & (values > 0.0))
    keep = keep[int(np.floor(keep.size * (1.0 - TAIL_FRACTION))):]
    if keep.size < 3:
        return None
    c, mu, r2 = exponential_fit(times[keep], values[keep])
    return {"C": c, "mu": mu, "r2": r2, "samples": int(keep.size)}


def dirichlet_solve(problem: FlowProblem, initial: FlowState, settings: FlowSettings) -> DirichletResult:
    """Run the pinned-boundary flow to convergence and fit the decay of sup theta.

    Raises:
        ConfigurationError: without boundary data, or when the initial state
            does not extend the boundary values.
    """
    if not problem.is_dirichlet:
        raise ConfigurationError("dirichlet_solve needs boundary data on an annulus base")
    mask = problem.grid.boundary_mask()
    mismatch = sup_norm(initial.u[mask] - problem.boundary_u[mask])
    if mismatch > BOUNDARY_TOL:
        raise ConfigurationError(f"initial metric does not extend the boundary data (mismatch {mismatch:.3e})")

    report = flow_run(problem, initial, settings)
    fit = tail_fit(report.times, report.sup_theta)
    report.fit = fit
    if not report.converged:
        message = (f"no convergence within {len(report.times) - 1} steps "
                   f"(residual {report.residual[-1]:.3e}, tol {settings.tol:.1e})")
        report.failures.append(message)
        logger.warning(message)
    if fit is None:
        c = mu = r2 = None
    else:
        c, mu, r2 = fit["C"], fit["mu"], fit["r2"]
    return DirichletResult(report.final_state.sigma, c, mu, r2, report)
