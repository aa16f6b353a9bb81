"""Hermitian metrics and Dolbeault operators on the trivial bundle X x B x C^r."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from geometry.calculus import complex_derivative
from geometry.grid import ProductGrid
from utils.errors import DomainError, ShapeError
from utils.numerics import (
    check_positive,
    commutator,
    h_adjoint,
    identity_field,
    inv_sqrtm_pos,
    sqrtm_pos,
    sup_norm,
)

INTEGRABILITY_TOL = 1e-10
GAUGE_TOL = 1e-10


def _check_shape(name: str, arr: np.ndarray, grid: ProductGrid) -> np.ndarray:
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim != 6 or arr.shape[:4] != grid.shape or arr.shape[4] != arr.shape[5]:
        raise ShapeError(f"{name} has shape {arr.shape}, expected {grid.shape} + (r, r)")
    return arr


@dataclass
class MetricData:
    """Hermitian metric h(u, v) = v^dagger sigma u relative to the flat reference."""

    grid: ProductGrid
    sigma: np.ndarray

    def __post_init__(self):
        self.sigma = _check_shape("sigma", self.sigma, self.grid)
        check_positive(self.sigma)

    @classmethod
    def identity(cls, grid: ProductGrid, rank: int) -> "MetricData":
        return cls(grid, identity_field(grid.shape, rank))

    @classmethod
    def from_base(cls, grid: ProductGrid, sigma_base: np.ndarray) -> "MetricData":
        """Fibre-constant metric from base data of shape (Nb1, Nb2, r, r)."""
        sigma_base = np.asarray(sigma_base, dtype=complex)
        return cls(grid, np.broadcast_to(sigma_base, grid.shape[:2] + sigma_base.shape).copy())

    @classmethod
    def conformal(cls, grid: ProductGrid, phi_base: np.ndarray, rank: int) -> "MetricData":
        """h = exp(phi) id for a real base function phi."""
        sigma = np.exp(np.asarray(phi_base, dtype=float))[..., None, None] * identity_field(grid.base_shape, rank)
        return cls.from_base(grid, sigma)

    @property
    def rank(self) -> int:
        return self.sigma.shape[-1]

    @property
    def base_sigma(self) -> np.ndarray:
        """sigma at the first fibre node; equals the metric when it is fibre-constant."""
        return self.sigma[0, 0]

    def is_fibre_constant(self, tol: float = 1e-14) -> bool:
        return sup_norm(self.sigma - self.sigma[:1, :1]) <= tol * max(1.0, sup_norm(self.sigma))

    def adjoint(self, m: np.ndarray) -> np.ndarray:
        return h_adjoint(m, self.sigma)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.sigma)

    def sqrt(self) -> np.ndarray:
        return sqrtm_pos(self.sigma)

    def inv_sqrt(self) -> np.ndarray:
        return inv_sqrtm_pos(self.sigma)


@dataclass
class DolbeaultData:
    """dbar = dbar_0 + a_V dzbar + a_H dwbar on the trivial bundle."""

    grid: ProductGrid
    a_v: np.ndarray
    a_h: Optional[np.ndarray] = None
    name: str = "custom"
    gauge_fixed: bool = field(init=False)

    def __post_init__(self):
        self.a_v = _check_shape("a_V", self.a_v, self.grid)
        self.a_h = np.zeros_like(self.a_v) if self.a_h is None else _check_shape("a_H", self.a_h, self.grid)
        if self.a_h.shape != self.a_v.shape:
            raise ShapeError("a_V and a_H must have the same rank")
        self.gauge_fixed = is_gauge_fixed(self.a_v, self.grid)

    @classmethod
    def trivial(cls, grid: ProductGrid, rank: int) -> "DolbeaultData":
        zero = np.zeros(grid.shape + (rank, rank), dtype=complex)
        return cls(grid, zero, zero.copy(), name="trivial")

    @property
    def rank(self) -> int:
        return self.a_v.shape[-1]

    def is_vertically_trivial(self) -> bool:
        return sup_norm(self.a_v) == 0.0

    def plus(self, deformation: "DolbeaultData", s: float = 1.0) -> "DolbeaultData":
        """dbar_0 + s a as a new operator."""
        return DolbeaultData(self.grid, self.a_v + s * deformation.a_v,
                             self.a_h + s * deformation.a_h, name=f"{self.name}+{deformation.name}")

    def scaled(self, s: float) -> "DolbeaultData":
        return DolbeaultData(self.grid, s * self.a_v, s * self.a_h, name=self.name)


def is_gauge_fixed(a_v: np.ndarray, grid: ProductGrid, tol: float = GAUGE_TOL) -> bool:
    """Flat-gauge condition d/dz a_V = 0 (Coulomb condition for the flat reference)."""
    return sup_norm(complex_derivative(a_v, grid, "z")) <= tol * max(1.0, sup_norm(a_v))


def integrability_defect(d: DolbeaultData) -> float:
    """Sup norm of the (0,2) curvature d_zbar a_H - d_wbar a_V + [a_V, a_H]."""
    f02 = (complex_derivative(d.a_h, d.grid, "zbar") - complex_derivative(d.a_v, d.grid, "wbar")
           + commutator(d.a_v, d.a_h))
    return sup_norm(f02)


def integrability_tolerance(d: DolbeaultData) -> float:
    """Tolerance for the (0,2) check.

    On the annulus, holomorphic data such as exp(2 pi i w) is only discretely
    holomorphic up to the radial truncation error, so the tolerance carries an
    h^4 term there.
    """
    scale = max(1.0, sup_norm(d.a_v), sup_norm(d.a_h))
    tol = INTEGRABILITY_TOL
    if d.grid.is_annulus:
        h = 1.0 / (d.grid.base_size[1] - 1)
        tol += (2.0 * np.pi) ** 5 * h ** 4
    return tol * scale


def is_integrable(d: DolbeaultData, tol: Optional[float] = None) -> bool:
    tol = integrability_tolerance(d) if tol is None else tol
    return integrability_defect(d) <= tol


def family_member(d0: DolbeaultData, a: DolbeaultData, s: float) -> DolbeaultData:
    """dbar_0 + s a, checked for integrability.

    Raises:
        DomainError: if the (0,2) curvature exceeds the discretisation tolerance.
    """
    ds = d0.plus(a, s)
    defect = integrability_defect(ds)
    if defect > integrability_tolerance(ds):
        raise DomainError(f"dbar_0 + {s} a is not integrable (defect {defect:.3e})")
    return ds
