"""Second-order approximate Hermite-Einstein operators for omega_k.

Starting from a metric h solving the family equation for (dbar_0, a, lambda),
the order k^-1 error psi_2 = i Lambda_H F_0 + lambda Q (Q the quadratic
vertical curvature of a) splits as psi_B id + psi_H + psi_R.  psi_H vanishes by
the family equation; psi_B is absorbed by a base function phi_2 and psi_R by a
vertical endomorphism tau_2, through the gauge transformation
exp(phi_2) exp(tau_2 / k).
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse.linalg as spla

from adiabatic.expansion import EXACT_FLOOR, check_k_list, coupling_parameter
from bundle.connection import contracted_curvature, einstein_constants
from bundle.dolbeault import DolbeaultData, MetricData, family_member
from bundle.gauge import gauge_transform
from bundle.laplacian import laplacian
from config import config
from flow.monitors import interior_mask
from geometry.calculus import base_integral
from geometry.grid import ProductGrid
from projection.frames import HoloFrame, holo_frame
from projection.projections import decompose, pi
from utils.errors import NumericalError, ObstructionError
from utils.numerics import expm_herm, identity_field, loglog_slope, sup_norm

logger = logging.getLogger(__name__)

CG_RTOL = 1e-12


def quadratic_vertical_term(h: MetricData, d0: DolbeaultData, a: DolbeaultData) -> np.ndarray:
    """Q with i Lambda_V F_{dbar_0 + s a} = i Lambda_V F_0 + s (...) + s^2 Q, by a symmetric difference at s = 1."""
    values = {t: contracted_curvature(h, family_member(d0, a, t), "V") for t in (1.0, -1.0, 0.0)}
    return 0.5 * (values[1.0] + values[-1.0] - 2.0 * values[0.0])


def solve_base_poisson(grid: ProductGrid, rhs: np.ndarray) -> np.ndarray:
    """Solve -(d1^2 + d2^2) phi = rhs on the base.

    On a torus rhs must have zero mean and phi is normalised to zero mean.
    On an annulus phi vanishes on both boundary circles.
    """
    if grid.is_annulus:
        interior = np.flatnonzero(~grid.boundary_mask().ravel())
        block = grid.base_laplacian()[interior][:, interior].tocsc()
        phi = np.zeros(rhs.size)
        phi[interior] = spla.spsolve(block, np.real(rhs).ravel()[interior])
        return phi.reshape(rhs.shape)
    k1 = grid.wavenumbers["y1"][:, None]
    k2 = grid.wavenumbers["y2"][None, :]
    symbol = k1 ** 2 + k2 ** 2
    hat = np.fft.fft2(np.real(rhs))
    safe = np.where(symbol == 0.0, 1.0, symbol)
    hat = np.where(symbol == 0.0, 0.0, hat / safe)
    return np.real(np.fft.ifft2(hat))


def _h_frames(h: MetricData) -> Tuple[np.ndarray, np.ndarray]:
    return h.sqrt(), h.inv_sqrt()


def exp_h_hermitian(h: MetricData, x: np.ndarray) -> np.ndarray:
    """exp(x) for an h-Hermitian x, through the Hermitian matrix sigma^1/2 x sigma^-1/2."""
    root, root_inv = _h_frames(h)
    return root_inv @ expm_herm(root @ x @ root_inv) @ root


def vertical_corrector(h: MetricData, d0: DolbeaultData, fr: HoloFrame, psi_r: np.ndarray,
                       rtol: float = CG_RTOL) -> np.ndarray:
    """tau in the complement R of F with Delta_V tau = -psi_R.

    Conjugate gradients run on sigma^1/2 tau sigma^-1/2, where the h-pairing
    becomes the Frobenius product, and every application projects off F.

    Raises:
        NumericalError: if conjugate gradients do not converge.
    """
    root, root_inv = _h_frames(h)
    shape = psi_r.shape

    def complement(x: np.ndarray) -> np.ndarray:
        return x - pi(h, fr, x).field()

    def matvec(y: np.ndarray) -> np.ndarray:
        x = complement(root_inv @ y.reshape(shape) @ root)
        out = complement(laplacian(h, d0, "full", "V", x))
        return (root @ out @ root_inv).ravel()

    n = int(np.prod(shape))
    operator = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    rhs = (root @ complement(-psi_r) @ root_inv).ravel()
    if sup_norm(rhs) == 0.0:
        return np.zeros(shape, dtype=complex)
    y, info = spla.cg(operator, rhs, rtol=rtol, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise NumericalError(f"vertical corrector solve did not converge (cg info {info})")
    tau = root_inv @ y.reshape(shape) @ root
    return 0.5 * (tau + h.adjoint(tau))


@dataclass
class CorrectorSweep:
    residuals: List[float]
    slope: Optional[float]
    exact: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"residuals": self.residuals, "slope": self.slope, "exact_cancellation": self.exact}


@dataclass
class ApproximateSolution:
    """Correctors (phi_2, tau_2), constants (gamma_0, gamma_2) and residuals over k."""

    phi2: np.ndarray
    tau2: np.ndarray
    gamma0: float
    gamma2: float
    psi_h_norm: float
    psi_r_norm: float
    k_values: List[float]
    sweep: CorrectorSweep
    ablations: Dict[str, CorrectorSweep] = field(default_factory=dict)

    @property
    def residuals(self) -> List[float]:
        return self.sweep.residuals

    @property
    def slope(self) -> Optional[float]:
        return self.sweep.slope

    def rows(self) -> List[Dict[str, float]]:
        rows = []
        for i, k in enumerate(self.k_values):
            row = {"k": k, "residual": self.sweep.residuals[i]}
            for name, ablation in sorted(self.ablations.items()):
                row[f"residual_{name}"] = ablation.residuals[i]
            rows.append(row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma0": self.gamma0,
            "gamma2": self.gamma2,
            "psi_H_norm": self.psi_h_norm,
            "psi_R_norm": self.psi_r_norm,
            "phi2_norm": sup_norm(self.phi2),
            "tau2_norm": sup_norm(self.tau2),
            "k_values": self.k_values,
            "corrected": self.sweep.to_dict(),
            "ablations": {name: sweep.to_dict() for name, sweep in sorted(self.ablations.items())},
        }


def corrected_operator(h: MetricData, d0: DolbeaultData, a: DolbeaultData, lam: float, k: float,
                       phi2: np.ndarray, tau2: np.ndarray) -> DolbeaultData:
    """exp(phi_2) exp(tau_2 / k) applied to dbar_s, s = sqrt(lambda / k)."""
    grid = h.grid
    ds = family_member(d0, a, coupling_parameter(lam, k))
    scalar = np.broadcast_to(np.exp(phi2), grid.shape)[..., None, None] * identity_field(grid.shape, h.rank)
    return gauge_transform(scalar @ exp_h_hermitian(h, tau2 / k), ds)


def _residual(h: MetricData, d: DolbeaultData, k: float, target: float) -> float:
    value = contracted_curvature(h, d, "k", k) - target * identity_field(h.grid.shape, h.rank)
    return sup_norm(value[:, :, interior_mask(h.grid, 2)])


def _sweep(h: MetricData, d0: DolbeaultData, a: DolbeaultData, lam: float, k_values: Sequence[float],
           phi2: np.ndarray, tau2: np.ndarray, gamma0: float, gamma2: float) -> CorrectorSweep:
    residuals = [_residual(h, corrected_operator(h, d0, a, lam, k, phi2, tau2), k, gamma0 + gamma2 / k)
                 for k in k_values]
    exact = max(residuals) < EXACT_FLOOR
    slope = None if exact or len(k_values) < 2 else -loglog_slope(k_values, residuals)
    return CorrectorSweep(residuals, slope, exact)


def approx_solution_r2(h: MetricData, d0: DolbeaultData, a: DolbeaultData, lam: float,
                       k_list: Sequence[float], frame: Optional[HoloFrame] = None,
                       skip_phi: bool = False, skip_tau: bool = False,
                       ablations: bool = True) -> ApproximateSolution:
    """Build the order-two correctors and measure the corrected residual over k.

    With ``ablations`` the sweep is repeated without phi_2 and without tau_2.

    Raises:
        ObstructionError: if the family Hermite-Einstein equation fails at h,
            i.e. the H-component of psi_2 exceeds the obstruction tolerance.
    """
    grid = h.grid
    k_values = check_k_list(k_list)
    fr = holo_frame(d0) if frame is None else frame

    psi2 = contracted_curvature(h, d0, "H") + lam * quadratic_vertical_term(h, d0, a)
    psi_b, psi_h, psi_r = decompose(h, fr, psi2)
    psi_h_norm = sup_norm(psi_h.matrices()[interior_mask(grid, 2)])
    if psi_h_norm > config.obstruction_tol:
        raise ObstructionError(
            f"psi_2 has an H-component of size {psi_h_norm:.3e}: h does not solve the family "
            f"Hermite-Einstein equation for this deformation and lambda")

    gamma0 = einstein_constants(d0, h).c_v
    psi_b = np.real(psi_b)
    if grid.is_annulus:
        gamma2 = 0.0
    else:
        gamma2 = float(base_integral(psi_b, grid) / np.sum(grid.base_weights))
    phi2 = solve_base_poisson(grid, gamma2 - psi_b)
    tau2 = vertical_corrector(h, d0, fr, psi_r)
    logger.debug("gamma0=%.3e gamma2=%.3e |phi2|=%.3e |tau2|=%.3e",
                 gamma0, gamma2, sup_norm(phi2), sup_norm(tau2))

    zero_phi = np.zeros_like(phi2)
    zero_tau = np.zeros_like(tau2)
    sweep = _sweep(h, d0, a, lam, k_values,
                   zero_phi if skip_phi else phi2, zero_tau if skip_tau else tau2, gamma0, gamma2)
    extra = {}
    if ablations:
        extra["skip_phi"] = _sweep(h, d0, a, lam, k_values, zero_phi, tau2, gamma0, gamma2)
        extra["skip_tau"] = _sweep(h, d0, a, lam, k_values, phi2, zero_tau, gamma0, gamma2)
    return ApproximateSolution(phi2, tau2, float(gamma0), gamma2, psi_h_norm, sup_norm(psi_r),
                               k_values, sweep, extra)
