"""Donaldson's heat flow for Hermite-Einstein metrics on the total space with omega_k.

The metric is h sigma with sigma a full (not fibre-constant) positive
Hermitian field evolving by d sigma/dt = -2 sigma (i Lambda_k F_{h sigma} - c_k id).
As in the family flow the state is u = log sigma.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from bundle.connection import EinsteinConstants, contracted_curvature, einstein_constants
from bundle.dolbeault import DolbeaultData, MetricData, is_integrable
from config import config
from utils.errors import BlowUpError, ConfigurationError, DomainError
from utils.numerics import exp_derivative_inverse, expm_herm, hermitian_part, identity_field, logm_pos, trace

logger = logging.getLogger(__name__)


@dataclass
class DonaldsonSettings:
    dt: float = 1e-3
    t_end: float = 0.01
    monotone_tol: float = field(default_factory=lambda: config.monotone_tol)
    c_stab: float = field(default_factory=lambda: config.c_stab)

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigurationError("Donaldson flow needs dt > 0 and t_end >= 0")


@dataclass
class DonaldsonReport:
    k: float
    dt: float
    constants: EinsteinConstants
    times: List[float] = field(default_factory=list)
    sup_residual: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    final_sigma: Optional[np.ndarray] = None

    @property
    def final_residual(self) -> float:
        return self.sup_residual[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "dt": self.dt,
            "c_k": self.constants.c_k(self.k),
            "steps": len(self.times) - 1,
            "sup_residual_initial": self.sup_residual[0],
            "sup_residual_final": self.final_residual,
            "failures": list(self.failures),
        }


def donaldson_dt(h: MetricData, k: float, dt: float, c_stab: Optional[float] = None) -> float:
    """Requested dt capped by the rk4 bound for Delta^{1,0}_V + Delta^{1,0}_H / k."""
    c_stab = config.c_stab if c_stab is None else c_stab
    grid = h.grid
    return min(dt, c_stab / (grid.spectral_radius("V") + grid.spectral_radius("H") / k))


def einstein_defect(h: MetricData, d: DolbeaultData, k: float, c_k: float) -> np.ndarray:
    """i Lambda_k F - c_k id on the full grid."""
    return contracted_curvature(h, d, "k", k) - c_k * identity_field(h.grid.shape, h.rank)


def _h_norm(h: MetricData, m: np.ndarray) -> np.ndarray:
    """Pointwise |m|_h = sqrt(tr(m m^{*h}))."""
    return np.sqrt(np.maximum(np.real(trace(m @ h.adjoint(m))), 0.0))


def total_space_he_flow(h_init: MetricData, d: DolbeaultData, k: float,
                        settings: DonaldsonSettings) -> DonaldsonReport:
    """Run the flow from h_init and monitor sup |i Lambda_k F - c_k id|_h.

    The reference metric is the flat one; h_init supplies the initial sigma.
    Blow-up and monotonicity failures end up in the report.

    Raises:
        DomainError: if d is not integrable.
    """
    if not is_integrable(d):
        raise DomainError("the Donaldson flow needs an integrable Dolbeault operator")
    if k <= 0:
        raise ConfigurationError(f"k must be positive, got {k}")
    grid = h_init.grid
    constants = einstein_constants(d, h_init)
    c_k = constants.c_k(k)
    dt = donaldson_dt(h_init, k, settings.dt, settings.c_stab)
    n_steps = int(np.ceil(settings.t_end / dt - 1e-9))
    report = DonaldsonReport(k, dt, constants)

    def rhs(u: np.ndarray) -> np.ndarray:
        sigma = expm_herm(u)
        defect = einstein_defect(MetricData(grid, sigma), d, k, c_k)
        return hermitian_part(exp_derivative_inverse(u, -2.0 * sigma @ defect))

    u = logm_pos(h_init.sigma)
    for step in range(n_steps + 1):
        h = MetricData(grid, expm_herm(u))
        value = float(np.max(_h_norm(h, einstein_defect(h, d, k, c_k))))
        if report.sup_residual and value > report.sup_residual[-1] + settings.monotone_tol * (1.0 + report.sup_residual[-1]):
            message = f"sup |i Lambda_k F - c_k| increased at step {step}: {report.sup_residual[-1]:.6e} -> {value:.6e}"
            report.failures.append(message)
            logger.warning(message)
        report.times.append(step * dt)
        report.sup_residual.append(value)
        if step == n_steps:
            break
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        new_u = hermitian_part(u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not np.all(np.isfinite(new_u)):
            error = BlowUpError(step + 1, (step + 1) * dt, "Donaldson flow state became non-finite")
            report.failures.append(str(error))
            logger.warning(str(error))
            break
        u = new_u
    report.final_sigma = expm_herm(u)
    return report
