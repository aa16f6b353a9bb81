"""Chern connection, curvature and Einstein constants of (dbar, h)."""
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from bundle.dolbeault import DolbeaultData, MetricData
from geometry.calculus import complex_derivative, contract, total_integral
from geometry.fields import FORM_COMPONENTS, TwoForm
from geometry.grid import ProductGrid
from utils.errors import ShapeError
from utils.numerics import commutator, dagger, trace


@dataclass
class ChernConnection:
    """Connection coefficients: nabla_a = d_a + A_a for a in {z, zbar, w, wbar}."""

    grid: ProductGrid
    a_z: np.ndarray
    a_zbar: np.ndarray
    a_w: np.ndarray
    a_wbar: np.ndarray

    def coefficient(self, direction: str) -> np.ndarray:
        return {"z": self.a_z, "zbar": self.a_zbar, "w": self.a_w, "wbar": self.a_wbar}[direction]

    def covariant_derivative(self, s: np.ndarray, direction: str) -> np.ndarray:
        """Induced End(E) derivative d_a s + [A_a, s]."""
        return complex_derivative(s, self.grid, direction) + commutator(self.coefficient(direction), s)


@dataclass
class CurvatureData(TwoForm):
    """Curvature (1,1) coefficients plus the (0,2) coefficient of dzbar^dwbar."""

    f02: Optional[np.ndarray] = None


def chern_connection(h: MetricData, d: DolbeaultData) -> ChernConnection:
    """A^{0,1} = a and A^{1,0} = sigma^-1 d sigma - sigma^-1 a^dagger sigma."""
    sigma = h.sigma
    sigma_inv = np.linalg.inv(sigma)
    a_z = sigma_inv @ (complex_derivative(sigma, h.grid, "z") - dagger(d.a_v) @ sigma)
    a_w = sigma_inv @ (complex_derivative(sigma, h.grid, "w") - dagger(d.a_h) @ sigma)
    return ChernConnection(h.grid, a_z, d.a_v, a_w, d.a_h)


_PAIRS = {"zz": ("z", "zbar"), "zw": ("z", "wbar"), "wz": ("w", "zbar"), "ww": ("w", "wbar")}


def curvature_of(conn: ChernConnection, components: Iterable[str] = FORM_COMPONENTS,
                 with_f02: bool = False) -> CurvatureData:
    out = CurvatureData(conn.grid)
    for name in components:
        if name not in _PAIRS:
            raise ShapeError(f"unknown curvature component {name!r}")
        a, b = _PAIRS[name]
        value = (complex_derivative(conn.coefficient(b), conn.grid, a)
                 - complex_derivative(conn.coefficient(a), conn.grid, b)
                 + commutator(conn.coefficient(a), conn.coefficient(b)))
        setattr(out, name, value)
    if with_f02:
        out.f02 = (complex_derivative(conn.a_wbar, conn.grid, "zbar")
                   - complex_derivative(conn.a_zbar, conn.grid, "wbar")
                   + commutator(conn.a_zbar, conn.a_wbar))
    return out


def curvature(h: MetricData, d: DolbeaultData, components: Iterable[str] = FORM_COMPONENTS,
              with_f02: bool = True) -> CurvatureData:
    return curvature_of(chern_connection(h, d), components, with_f02)


_MODE_COMPONENTS = {"V": ("zz",), "H": ("ww",), "k": ("zz", "ww")}


def contracted_curvature(h: MetricData, d: DolbeaultData, mode: str, k: Optional[float] = None) -> np.ndarray:
    """i Lambda_mode F_{h, dbar}, Hermitian with respect to h."""
    if mode not in _MODE_COMPONENTS:
        raise ShapeError(f"unknown contraction mode {mode!r}")
    form = curvature(h, d, _MODE_COMPONENTS[mode], with_f02=False)
    return 1j * contract(form, mode, k)


@dataclass
class EinsteinConstants:
    c_v: float
    c_h: float
    degree_v: float
    degree_h: float
    rank: int

    def c_k(self, k: float) -> float:
        return self.c_v + self.c_h / k

    def to_dict(self):
        return {"c_V": self.c_v, "c_H": self.c_h, "degree_V": self.degree_v,
                "degree_H": self.degree_h, "rank": self.rank}


def einstein_constants(d: DolbeaultData, h: MetricData) -> EinsteinConstants:
    """c_V and c_H by quadrature of tr(i Lambda F); the product volume is 1."""
    grid = d.grid
    volume = float(np.sum(grid.base_weights))
    form = curvature(h, d, ("zz", "ww"), with_f02=False)
    deg_v = float(np.real(total_integral(trace(1j * contract(form, "V")), grid)))
    deg_h = float(np.real(total_integral(trace(1j * contract(form, "H")), grid)))
    r = d.rank
    return EinsteinConstants(deg_v / (r * volume), deg_h / (r * volume), deg_v, deg_h, r)
