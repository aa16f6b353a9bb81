"""Batched matrix helpers used throughout the laboratory.

Every function acts on the trailing two axes, so arrays of shape
``(..., r, r)`` are processed pointwise over the grid.
"""
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import stats

from utils.errors import DomainError

HERMITIAN_TOL = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def skew_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - dagger(a))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def trace(a: np.ndarray) -> np.ndarray:
    return np.trace(a, axis1=-2, axis2=-1)


def identity_field(shape: Sequence[int], rank: int) -> np.ndarray:
    """Identity endomorphism broadcast over a grid of the given shape."""
    out = np.zeros(tuple(shape) + (rank, rank), dtype=complex)
    out[..., range(rank), range(rank)] = 1.0
    return out


def h_adjoint(m: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Adjoint with respect to h(u, v) = v^dagger sigma u, i.e. sigma^-1 m^dagger sigma."""
    return np.linalg.solve(sigma, dagger(m) @ sigma)


def sup_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def herm_function(u: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a batch of Hermitian matrices through eigh."""
    w, v = np.linalg.eigh(hermitian_part(u))
    return (v * fn(w)[..., None, :]) @ dagger(v)


def expm_herm(u: np.ndarray) -> np.ndarray:
    return herm_function(u, np.exp)


def check_positive(sigma: np.ndarray, floor: float = 0.0, what: str = "metric") -> np.ndarray:
    """Validate a batch of Hermitian positive definite matrices and return its eigenvalues.

    Raises:
        DomainError: if any matrix is not Hermitian or has an eigenvalue <= floor.
    """
    scale = max(1.0, sup_norm(sigma))
    asym = sup_norm(sigma - dagger(sigma))
    if asym > HERMITIAN_TOL * scale:
        raise DomainError(f"{what} is not Hermitian (asymmetry {asym:.3e})")
    w = np.linalg.eigvalsh(hermitian_part(sigma))
    if not np.all(np.isfinite(w)) or np.min(w) <= floor:
        raise DomainError(f"{what} is not positive definite (min eigenvalue {np.min(w):.3e})")
    return w


def logm_pos(sigma: np.ndarray, floor: float = 0.0) -> np.ndarray:
    check_positive(sigma, floor)
    return herm_function(sigma, np.log)


def sqrtm_pos(sigma: np.ndarray) -> np.ndarray:
    check_positive(sigma)
    return herm_function(sigma, np.sqrt)


def inv_sqrtm_pos(sigma: np.ndarray) -> np.ndarray:
    check_positive(sigma)
    return herm_function(sigma, lambda w: 1.0 / np.sqrt(w))


def exp_derivative_inverse(u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Solve d/dt exp(u) = s for du/dt (Daleckii-Krein).

    With u = V diag(l) V^dagger the answer is V [(V^dagger s V) * G] V^dagger where
    G_ij = (l_i - l_j) / (e^{l_i} - e^{l_j}) and G_ii = e^{-l_i}.
    """
    w, v = np.linalg.eigh(hermitian_part(u))
    li = w[..., :, None]
    lj = w[..., None, :]
    d = li - lj
    half = 0.5 * d
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(half) < 1e-8, 1.0, half / np.sinh(np.where(half == 0, 1.0, half)))
    gamma = np.exp(-0.5 * (li + lj)) * ratio
    rotated = dagger(v) @ s @ v
    return v @ (rotated * gamma) @ dagger(v)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(stats.linregress(x, y).slope)


def exponential_fit(t: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Fit y ~ C exp(-mu t) and return (C, mu, r squared)."""
    fit = stats.linregress(np.asarray(t, dtype=float), np.log(np.asarray(y, dtype=float)))
    return float(np.exp(fit.intercept)), float(-fit.slope), float(fit.rvalue ** 2)


def hermitian_traceless_basis(rank: int) -> np.ndarray:
    """Frobenius-orthonormal basis of trace-free Hermitian r x r matrices, shape (r^2 - 1, r, r)."""
    out = []
    for j in range(rank):
        for k in range(j + 1, rank):
            sym = np.zeros((rank, rank), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            anti = np.zeros((rank, rank), dtype=complex)
            anti[j, k], anti[k, j] = -1j / np.sqrt(2.0), 1j / np.sqrt(2.0)
            out.extend([sym, anti])
    for l in range(1, rank):
        diag = np.zeros(rank)
        diag[:l] = 1.0
        diag[l] = -float(l)
        out.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(out).reshape(-1, rank, rank)
