"""The deformation moment map nu_h(a) and the order-s^2 curvature expansion.

Sign convention: <nu(a), xi> = -1/2 Omega([xi, a], a) with
<xi, eta> = -int_X tr(xi eta).  With it, p(i Lambda_V F_{dbar_0 + s a}) = -s^2 i nu(a)
holds exactly in the flat testbed; for N = [[0,1],[0,0]] at h = id,
i nu(N dzbar) = -2 diag(1, -1).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from bundle.connection import contracted_curvature
from bundle.dolbeault import DolbeaultData, MetricData, family_member, is_gauge_fixed
from geometry.grid import ProductGrid
from moment_map.symplectic import infinitesimal_action, omega_pair
from projection.frames import HoloFrame, holo_frame
from projection.projections import p, pi
from utils.errors import AssumptionViolation, NumericalError
from utils.numerics import loglog_slope, sup_norm, trace

logger = logging.getLogger(__name__)

KFRAK_TOL = 1e-10
EXACT_FLOOR = 1e-12


def commutant_dimension(a_v: np.ndarray, tol: float = 1e-10) -> int:
    """Complex dimension of {X in gl(r) : [a_V(p), X] = 0 at every grid point}."""
    r = a_v.shape[-1]
    eye = np.eye(r)
    ad = np.kron(a_v, eye) - np.kron(eye, np.swapaxes(a_v, -1, -2))
    ad = ad.reshape(-1, r * r, r * r)
    gram = np.einsum("pji,pjk->ik", np.conj(ad), ad)
    vals = np.linalg.eigvalsh(gram)
    return int(np.sum(vals <= tol * max(1.0, float(np.max(vals)))))


@dataclass
class DeformationData:
    """First-order vertical deformation a_V with its bookkeeping."""

    grid: ProductGrid
    a_v: np.ndarray
    gauge_fixed: bool = field(init=False)
    commutant_dim: int = field(init=False)

    def __post_init__(self):
        self.a_v = np.asarray(self.a_v, dtype=complex)
        self.gauge_fixed = is_gauge_fixed(self.a_v, self.grid)
        self.commutant_dim = commutant_dimension(self.a_v)

    @classmethod
    def from_dolbeault(cls, d: DolbeaultData) -> "DeformationData":
        return cls(d.grid, d.a_v)

    def scaled(self, t: float) -> "DeformationData":
        return DeformationData(self.grid, t * self.a_v)


@dataclass
class NuValue:
    """nu_h(a) at every base point, shape (Nb1, Nb2, r, r), skew-h-Hermitian."""

    grid: ProductGrid
    matrices: np.ndarray

    @property
    def i_nu(self) -> np.ndarray:
        return 1j * self.matrices

    def __neg__(self) -> "NuValue":
        return NuValue(self.grid, -self.matrices)


def _skew_candidates(h: MetricData, fr: HoloFrame) -> np.ndarray:
    """pi of (X - X^{*h})/2 for X in {e_j, i e_j}, shape (Nb1, Nb2, 2 dim, r, r)."""
    out = []
    for scale in (1.0, 1j):
        for j in range(fr.dim):
            e = np.array(fr.broadcast(scale * fr.basis[:, :, j]))
            out.append(pi(h, fr, 0.5 * (e - h.adjoint(e))).matrices())
    return np.stack(out, axis=2)


def kfrak_gram(xi: np.ndarray) -> np.ndarray:
    """<xi_i, xi_j> = -tr(xi_i xi_j) for fibre-constant skew elements (unit fibre volume)."""
    return -np.real(np.einsum("...iab,...jba->...ij", xi, xi))


def kfrak_basis(h: MetricData, fr: HoloFrame) -> np.ndarray:
    """Orthonormal real basis of the skew-h-Hermitian holomorphic endomorphisms.

    Raises:
        AssumptionViolation: if the dimension changes over the base.
    """
    cand = _skew_candidates(h, fr)
    gram = kfrak_gram(cand)
    vals, vecs = np.linalg.eigh(gram)
    keep = vals > KFRAK_TOL * np.max(vals, axis=-1, keepdims=True)
    dims = np.unique(np.sum(keep, axis=-1))
    if dims.size != 1:
        raise AssumptionViolation(f"dimension of the skew holomorphic algebra jumps: {dims.tolist()}")
    m = int(dims[0])
    order = np.argsort(~keep, axis=-1, kind="stable")[..., :m]
    sel_vals = np.take_along_axis(vals, order, axis=-1)
    sel_vecs = np.take_along_axis(vecs, order[..., None, :], axis=-1)
    coeffs = sel_vecs / np.sqrt(sel_vals)[..., None, :]
    return np.einsum("...ck,...cab->...kab", coeffs, cand)


def nu(h: MetricData, fr: HoloFrame, a: Union[DeformationData, DolbeaultData]) -> NuValue:
    """Moment map by the Gram system <nu, xi_i> = -1/2 Omega([xi_i, a], a).

    Raises:
        NumericalError: if the Gram matrix of the skew basis is singular.
    """
    basis = kfrak_basis(h, fr)
    rhs = np.stack([-0.5 * omega_pair(h, infinitesimal_action(basis[:, :, i], a.a_v), a.a_v)
                    for i in range(basis.shape[2])], axis=-1)
    gram = kfrak_gram(basis)
    cond = np.linalg.cond(gram)
    if not np.all(np.isfinite(cond)) or np.max(cond) > 1e10:
        raise NumericalError(f"skew Gram system is singular (condition number {np.max(cond):.3e})")
    coeffs = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return NuValue(h.grid, np.einsum("...i,...iab->...ab", coeffs, basis))


@dataclass
class ExpansionReport:
    s_values: List[float]
    defects: List[float]
    slope: Optional[float]
    exact: bool

    def to_dict(self):
        return {"s_values": self.s_values, "defects": self.defects,
                "slope": self.slope, "exact_cancellation": self.exact}


def expansion_defect(h: MetricData, d0: DolbeaultData, a: DolbeaultData, s_values: Sequence[float],
                     nu_value: Optional[NuValue] = None, frame: Optional[HoloFrame] = None) -> ExpansionReport:
    """sup |p_h(i Lambda_V F_{h, dbar_0 + s a}) + s^2 i nu_h(a)| for each s, with the log-log slope.

    When every defect is below 1e-12 the report states exact cancellation and
    carries no slope.
    """
    fr = holo_frame(d0) if frame is None else frame
    nu_value = nu(h, fr, a) if nu_value is None else nu_value
    defects = []
    for s in s_values:
        ds = family_member(d0, a, s)
        proj = p(h, fr, contracted_curvature(h, ds, "V"))
        defects.append(sup_norm(proj.matrices() + s ** 2 * nu_value.i_nu))
    exact = max(defects, default=0.0) < EXACT_FLOOR
    slope = None if exact or len(s_values) < 2 else loglog_slope(s_values, defects)
    logger.debug("expansion defects %s (slope %s)", defects, slope)
    return ExpansionReport(list(map(float, s_values)), defects, slope, exact)


def expansion_nu(h: MetricData, d0: DolbeaultData, a: DolbeaultData, s: float = 1.0,
                 frame: Optional[HoloFrame] = None) -> NuValue:
    """nu from the symmetric second difference of p(i Lambda_V F) in s."""
    fr = holo_frame(d0) if frame is None else frame
    terms = {t: p(h, fr, contracted_curvature(h, family_member(d0, a, t), "V")).matrices()
             for t in (s, -s, 0.0)}
    quadratic = (terms[s] + terms[-s] - 2.0 * terms[0.0]) / (2.0 * s ** 2)
    # p(i Lambda_V F_s) = -s^2 i nu  =>  nu = i * quadratic
    return NuValue(h.grid, 1j * quadratic)


def nu_trace_defect(value: NuValue) -> float:
    return sup_norm(trace(value.matrices))
