"""Complex gauge action g . dbar = g o dbar o g^-1 and metric pullback."""
from typing import Optional

import numpy as np

from bundle.connection import contracted_curvature
from bundle.dolbeault import DolbeaultData, MetricData
from geometry.calculus import complex_derivative
from utils.errors import DomainError
from utils.numerics import dagger, identity_field, sqrtm_pos, sup_norm

SINGULAR_COND = 1e12


def _checked_inverse(g: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(g)
    if not np.all(np.isfinite(cond)) or np.max(cond) > SINGULAR_COND:
        raise DomainError(f"gauge transformation is singular (max condition number {np.max(cond):.3e})")
    return np.linalg.inv(g)


def gauge_transform(g: np.ndarray, d: DolbeaultData) -> DolbeaultData:
    """a' = g a g^-1 - (dbar g) g^-1 in both the dzbar and dwbar directions."""
    g = np.asarray(g, dtype=complex)
    g_inv = _checked_inverse(g)
    a_v = g @ d.a_v @ g_inv - complex_derivative(g, d.grid, "zbar") @ g_inv
    a_h = g @ d.a_h @ g_inv - complex_derivative(g, d.grid, "wbar") @ g_inv
    return DolbeaultData(d.grid, a_v, a_h, name=f"g.{d.name}")


def metric_pullback(g: np.ndarray, h: MetricData) -> MetricData:
    """(g^* h)(u, v) = h(g u, g v), i.e. sigma' = g^dagger sigma g."""
    g = np.asarray(g, dtype=complex)
    _checked_inverse(g)
    return MetricData(h.grid, dagger(g) @ h.sigma @ g)


def conjugation_identity_residual(sigma: np.ndarray, d: DolbeaultData, mode: str = "k",
                                  k: Optional[float] = None) -> float:
    """Sup of i Lambda F_{sigma, dbar} - sigma^{-1/2} i Lambda F_{id, sigma^{1/2}.dbar} sigma^{1/2}."""
    root = sqrtm_pos(sigma)
    root_inv = np.linalg.inv(root)
    lhs = contracted_curvature(MetricData(d.grid, sigma), d, mode, k)
    flat = MetricData(d.grid, identity_field(d.grid.shape, d.rank))
    rhs = root_inv @ contracted_curvature(flat, gauge_transform(root, d), mode, k) @ root
    return sup_norm(lhs - rhs)
