"""Holomorphic frames of the bundle F_b = H^0(X_b, End E_b)."""
import logging
from dataclasses import dataclass

import numpy as np

from bundle.dolbeault import DolbeaultData
from geometry.grid import ProductGrid, fourier_derivative_matrix
from utils.errors import AssumptionViolation

logger = logging.getLogger(__name__)

FIBRE_CONSTANT_TOL = 1e-6


@dataclass
class HoloFrame:
    """Fibre-constant frame of holomorphic endomorphisms over each base point.

    ``basis`` has shape (Nb1, Nb2, dim, r, r); it is orthonormal for the flat
    Frobenius product at every base point.
    """

    grid: ProductGrid
    basis: np.ndarray
    dolbeault: DolbeaultData
    tol: float = 1e-8

    @property
    def dim(self) -> int:
        return self.basis.shape[2]

    @property
    def rank(self) -> int:
        return self.basis.shape[-1]

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        """Matrices sum_i c_i(b) e_i(b), shape (Nb1, Nb2, r, r)."""
        return np.einsum("...i,...ijk->...jk", coeffs, self.basis)

    def broadcast(self, base_values: np.ndarray) -> np.ndarray:
        """Fibre-constant full-grid array from base data."""
        return np.broadcast_to(base_values, self.grid.shape[:2] + base_values.shape)

    def identity_coefficients(self) -> np.ndarray:
        """Coefficients of id (the frame is orthonormal, so these are <id, e_i>)."""
        return np.einsum("...ijk,jk->...i", np.conj(self.basis), np.eye(self.rank))


def elementary_basis(rank: int) -> np.ndarray:
    basis = np.zeros((rank * rank, rank, rank), dtype=complex)
    for i in range(rank):
        for j in range(rank):
            basis[i * rank + j, i, j] = 1.0
    return basis


def fibre_dbar_matrix(a_v: np.ndarray, n: int) -> np.ndarray:
    """Dense matrix of s -> d_zbar s + [a_V, s] on one fibre, s flattened as (x1, x2, i, j)."""
    r = a_v.shape[-1]
    d = fourier_derivative_matrix(n)
    eye_n = np.eye(n)
    eye_r2 = np.eye(r * r)
    dbar = 0.5 * (np.kron(d, eye_n) + 1j * np.kron(eye_n, d))
    op = np.kron(dbar, eye_r2).astype(complex)
    eye_r = np.eye(r)
    ad = np.kron(a_v, eye_r) - np.kron(eye_r, np.swapaxes(a_v, -1, -2))
    flat = ad.reshape(n * n, r * r, r * r)
    size = r * r
    for p in range(n * n):
        op[p * size:(p + 1) * size, p * size:(p + 1) * size] += flat[p]
    return op


def _kernel_at(a_v_fibre: np.ndarray, tol: float) -> np.ndarray:
    n = a_v_fibre.shape[0]
    r = a_v_fibre.shape[-1]
    op = fibre_dbar_matrix(a_v_fibre, n)
    vals, vecs = np.linalg.eigh(op.conj().T @ op)
    kernel = vecs[:, vals < tol]
    fields = kernel.T.reshape(-1, n, n, r, r) * n
    means = fields.mean(axis=(1, 2))
    spread = np.max(np.abs(fields - means[:, None, None]), initial=0.0)
    if spread > FIBRE_CONSTANT_TOL:
        raise AssumptionViolation(
            f"holomorphic endomorphisms vary along the fibre (spread {spread:.2e})")
    q, _ = np.linalg.qr(means.reshape(-1, r * r).T)
    return q.T.reshape(-1, r, r)


def holo_frame(d0: DolbeaultData, tol: float = 1e-8) -> HoloFrame:
    """Frame of ker(dbar_V) on End(E) at every base point.

    Vertically trivial operators use the elementary matrices E_ij directly.
    Otherwise each fibre is solved densely through the kernel of D^dagger D.

    Raises:
        AssumptionViolation: if the kernel dimension changes over B or the
            kernel is not fibre-constant.
    """
    grid = d0.grid
    r = d0.rank
    nb1, nb2 = grid.base_size
    if d0.is_vertically_trivial():
        basis = np.broadcast_to(elementary_basis(r), (nb1, nb2, r * r, r, r)).copy()
        return HoloFrame(grid, basis, d0, tol)

    frames = {}
    for b1 in range(nb1):
        for b2 in range(nb2):
            frames[(b1, b2)] = _kernel_at(d0.a_v[:, :, b1, b2], tol)
    dims = {f.shape[0] for f in frames.values()}
    if len(dims) != 1:
        raise AssumptionViolation(f"fibrewise kernel dimension jumps over the base: {sorted(dims)}")
    dim = dims.pop()
    logger.debug("holomorphic frame of dimension %d on %s base", dim, grid.base_kind)
    basis = np.empty((nb1, nb2, dim, r, r), dtype=complex)
    for (b1, b2), frame in frames.items():
        basis[b1, b2] = frame
    return HoloFrame(grid, basis, d0, tol)
