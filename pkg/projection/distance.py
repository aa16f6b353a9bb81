"""Geometry of the cone of fibre-constant metrics on F."""
import numpy as np
from scipy import linalg

from geometry.grid import ProductGrid
from utils.errors import DomainError
from utils.numerics import check_positive, dagger, expm_herm, hermitian_part, trace


def _base_integral(values: np.ndarray, grid: ProductGrid) -> float:
    return float(np.real(np.tensordot(grid.base_weights, values, axes=([0, 1], [0, 1]))))


def generalized_log_eigenvalues(sigma1: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """log of the eigenvalues of sigma1^-1 sigma2 at every base point."""
    check_positive(sigma1)
    check_positive(sigma2)
    flat1 = sigma1.reshape(-1, *sigma1.shape[-2:])
    flat2 = sigma2.reshape(-1, *sigma2.shape[-2:])
    vals = np.stack([linalg.eigh(b, a, eigvals_only=True) for a, b in zip(flat1, flat2)])
    return np.log(vals).reshape(sigma1.shape[:-1])


def pointwise_distance_sq(sigma1: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """d_b^2 = sum of squared log generalized eigenvalues."""
    return np.sum(generalized_log_eigenvalues(sigma1, sigma2) ** 2, axis=-1)


def homogeneous_distance(sigma1: np.ndarray, sigma2: np.ndarray, grid: ProductGrid) -> float:
    """L^2 distance on the cone: (int_B d_b^2)^(1/2)."""
    return float(np.sqrt(_base_integral(pointwise_distance_sq(sigma1, sigma2), grid)))


def geodesic(sigma1: np.ndarray, tau: np.ndarray, t: float) -> np.ndarray:
    """sigma1 exp(t tau) for a sigma1-self-adjoint direction tau."""
    # sigma1 exp(t tau) = s exp(t s tau s^-1) s with s = sigma1^{1/2}
    w, v = np.linalg.eigh(hermitian_part(sigma1))
    if np.min(w) <= 0:
        raise DomainError("geodesic base point is not positive definite")
    root = (v * np.sqrt(w)[..., None, :]) @ dagger(v)
    root_inv = (v * (1.0 / np.sqrt(w))[..., None, :]) @ dagger(v)
    inner = root @ tau @ root_inv
    return root @ expm_herm(t * hermitian_part(inner)) @ root


def geodesic_speed(tau: np.ndarray, grid: ProductGrid) -> float:
    """(int_B tr(tau^2))^(1/2), the constant speed of t -> sigma exp(t tau)."""
    return float(np.sqrt(max(_base_integral(np.real(trace(tau @ tau)), grid), 0.0)))


def cone_inner_product(sigma: np.ndarray, u: np.ndarray, v: np.ndarray, grid: ProductGrid) -> float:
    """Riemannian metric of the cone at sigma: int_B tr(sigma^-1 u sigma^-1 v)."""
    sigma_inv = np.linalg.inv(sigma)
    return _base_integral(np.real(trace(sigma_inv @ u @ sigma_inv @ v)), grid)
