"""The symplectic form on (0,1)-forms and the infinitesimal gauge action."""
from typing import Optional, Tuple

import numpy as np

from bundle.dolbeault import MetricData
from geometry.calculus import fibre_integral
from utils.numerics import commutator, trace


def real_form(h: MetricData, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients (of dzbar, of dz) of the real form a dzbar - (a dzbar)^{*h}."""
    return a, -h.adjoint(a)


def omega_density(h: MetricData, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Pointwise -Lambda tr(alpha~ ^ beta~) for two dzbar coefficients.

    alpha~ ^ beta~ = (alpha_z beta_zbar - alpha_zbar beta_z) dz^dzbar and
    Lambda(dz^dzbar) = -2i.
    """
    a_zbar, a_z = real_form(h, alpha)
    b_zbar, b_z = real_form(h, beta)
    wedge = trace(a_z @ b_zbar - a_zbar @ b_z)
    return np.real(2j * wedge)


def omega_pair(h: MetricData, alpha: np.ndarray, beta: np.ndarray,
               b: Optional[Tuple[int, int]] = None):
    """Omega(alpha~, beta~) integrated over each fibre.

    Returns base data of shape (Nb1, Nb2), or a float at base index ``b``.
    """
    values = fibre_integral(omega_density(h, alpha, beta), h.grid)
    if b is None:
        return values
    return float(values[b])


def complex_structure(alpha: np.ndarray) -> np.ndarray:
    """J on (0,1)-forms: multiplication by i."""
    return 1j * np.asarray(alpha)


def infinitesimal_action(xi: np.ndarray, a_v: np.ndarray) -> np.ndarray:
    """[xi, a_V] pointwise; xi may be a constant matrix or base data (Nb1, Nb2, r, r)."""
    xi = np.asarray(xi, dtype=complex)
    return commutator(xi, a_v)
