"""The operator L = p o Delta_H + lambda D_V on trace-free Hermitian sections of F.

L is assembled through its quadratic form

    <L s, t> = <nabla_H s, nabla_H t> + lambda <A s, A t>,   A s = [a_V, s] dzbar + [-a_V^{*h}, s] dz,

on real trigonometric base functions times an h-orthonormal trace-free
Hermitian matrix basis, and diagonalised against the L^2 Gram matrix.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Union

import numpy as np
from scipy import linalg

from bundle.connection import chern_connection
from bundle.dolbeault import DolbeaultData, MetricData
from geometry.grid import ProductGrid
from moment_map.nu import DeformationData
from projection.frames import HoloFrame
from utils.errors import AssumptionViolation
from utils.numerics import commutator, hermitian_traceless_basis

logger = logging.getLogger(__name__)

KERNEL_TOL = 1e-8


def _periodic_functions(y: np.ndarray) -> np.ndarray:
    n = y.size
    out = [np.ones(n)]
    for m in range(1, n // 2):
        out.extend([np.cos(2.0 * np.pi * m * y), np.sin(2.0 * np.pi * m * y)])
    return np.array(out)


def base_functions(grid: ProductGrid) -> np.ndarray:
    """Real base functions of shape (n, Nb1, Nb2): trig products, or trig times nodal deltas on an annulus."""
    first = _periodic_functions(grid.coordinates["y1"])
    if grid.is_annulus:
        second = np.eye(grid.base_size[1])
    else:
        second = _periodic_functions(grid.coordinates["y2"])
    funcs = np.einsum("ia,jb->ijab", first, second)
    return funcs.reshape(-1, *grid.base_size)


def hermitian_commutant_dimension(a_v: np.ndarray, tol: float = 1e-10) -> int:
    """dim of constant trace-free Hermitian X with [a_V(p), X] = 0 at every grid point."""
    r = a_v.shape[-1]
    herm = hermitian_traceless_basis(r)
    columns = []
    for x in herm:
        c = commutator(a_v, x).reshape(-1)
        columns.append(np.concatenate([c.real, c.imag]))
    stacked = np.array(columns).T
    return int(linalg.null_space(stacked, rcond=tol).shape[1])


def _pairing_matrix(h: MetricData, stack: List[np.ndarray], weights: np.ndarray) -> np.ndarray:
    n = len(stack)
    xs = np.array(stack) * weights[..., None, None]
    adj_t = np.swapaxes(np.array([h.adjoint(x) for x in stack]), -1, -2)
    return np.real(xs.reshape(n, -1) @ adj_t.reshape(n, -1).T)


@dataclass
class LOperator:
    matrix: np.ndarray
    gram: np.ndarray
    eigenvalues: np.ndarray
    kernel: np.ndarray
    symmetry_defect: float
    commutant_dim: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def kernel_dim(self) -> int:
        return self.kernel.shape[1]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.size,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": float(self.eigenvalues[-1]),
            "smallest_eigenvalues": [float(v) for v in self.eigenvalues[:8]],
            "kernel_dim": self.kernel_dim,
            "symmetry_defect": self.symmetry_defect,
            "hermitian_commutant_dim": self.commutant_dim,
        }


def l_operator(h: MetricData, fr: HoloFrame, a: Union[DeformationData, DolbeaultData], lam: float = 1.0) -> LOperator:
    """Matrix, spectrum and kernel of L.

    Raises:
        AssumptionViolation: if dbar_0 is not vertically trivial (F is then not all of End E).
    """
    d0 = fr.dolbeault
    if not d0.is_vertically_trivial():
        raise AssumptionViolation("L is assembled for vertically trivial dbar_0, where F = End(E)")
    grid = h.grid
    root, root_inv = h.sqrt(), h.inv_sqrt()
    conn = chern_connection(h, d0)
    a_v = a.a_v
    a_star = h.adjoint(a_v)
    weights = grid.fibre_weights[:, :, None, None] * grid.base_weights[None, None]

    fields, d1, d2, ca, cas = [], [], [], [], []
    for f in base_functions(grid):
        scalar = np.broadcast_to(f, grid.shape)[..., None, None]
        for x in hermitian_traceless_basis(h.rank):
            field = scalar * (root_inv @ x @ root)
            dw = conn.covariant_derivative(field, "w")
            dwb = conn.covariant_derivative(field, "wbar")
            fields.append(field)
            d1.append(dw + dwb)
            d2.append(1j * (dw - dwb))
            ca.append(commutator(a_v, field))
            cas.append(commutator(a_star, field))

    # |dz|^2 = 2 for the vertical (0,1) and (1,0) parts
    q = (_pairing_matrix(h, d1, weights) + _pairing_matrix(h, d2, weights)
         + 2.0 * lam * (_pairing_matrix(h, ca, weights) + _pairing_matrix(h, cas, weights)))
    g = _pairing_matrix(h, fields, weights)
    symmetry = float(np.max(np.abs(q - q.T)) / max(1.0, np.max(np.abs(q))))
    q = 0.5 * (q + q.T)
    g = 0.5 * (g + g.T)
    vals, vecs = linalg.eigh(q, g)
    tol = KERNEL_TOL * max(1.0, float(vals[-1]))
    kernel = vecs[:, vals <= tol]
    logger.debug("L: size %d, min eigenvalue %.3e, kernel %d", q.shape[0], vals[0], kernel.shape[1])
    return LOperator(q, g, vals, kernel, symmetry, hermitian_commutant_dimension(a_v))
