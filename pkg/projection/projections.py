"""L^2 projections onto holomorphic endomorphisms and the induced structure on F.

pi_h maps an End(E)-valued field to its fibrewise L^2(h)-orthogonal projection
onto F_b; p_h removes the trace part; split_hs separates h-Hermitian and
skew-Hermitian parts of a section of F.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from bundle.connection import chern_connection
from bundle.dolbeault import MetricData
from config import config
from geometry.calculus import fibre_integral
from geometry.fields import MatrixField
from projection.frames import HoloFrame
from utils.errors import NumericalError, ShapeError
from utils.numerics import trace

PAIRINGS = ("real", "complex")
TRACE_MODES = ("pointwise", "fibre_mean")


@dataclass
class SectionF:
    """Section of F = pi_* End(E) in frame coordinates, coeffs of shape (Nb1, Nb2, dim)."""

    frame: HoloFrame
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        expected = self.frame.grid.base_size + (self.frame.dim,)
        if self.coeffs.shape != expected:
            raise ShapeError(f"coefficients of shape {self.coeffs.shape}, expected {expected}")

    def matrices(self) -> np.ndarray:
        return self.frame.reconstruct(self.coeffs)

    def field(self) -> np.ndarray:
        """Fibre-constant full-grid array of shape grid.shape + (r, r)."""
        return np.array(self.frame.broadcast(self.matrices()))

    def as_matrix_field(self) -> MatrixField:
        return MatrixField(self.frame.grid, self.field())

    def __add__(self, other: "SectionF") -> "SectionF":
        return SectionF(self.frame, self.coeffs + other.coeffs)

    def __sub__(self, other: "SectionF") -> "SectionF":
        return SectionF(self.frame, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SectionF":
        return SectionF(self.frame, self.coeffs * scalar)

    __rmul__ = __mul__


FieldLike = Union[np.ndarray, MatrixField, SectionF]


def _as_array(f: FieldLike) -> np.ndarray:
    if isinstance(f, SectionF):
        return f.field()
    if isinstance(f, MatrixField):
        return f.data
    return np.asarray(f, dtype=complex)


def _conjugated_fibre_means(h: MetricData, values: np.ndarray) -> np.ndarray:
    """Fibre integral of sigma v sigma^-1 (v carries the field shape plus extra batch axes)."""
    sigma = h.sigma
    sigma_inv = np.linalg.inv(sigma)
    extra = values.ndim - 6
    if h.is_fibre_constant():
        means = fibre_integral(values, h.grid)
        s = h.base_sigma.reshape(h.grid.base_size + (1,) * extra + sigma.shape[-2:])
        s_inv = np.linalg.inv(h.base_sigma).reshape(s.shape)
        return s @ means @ s_inv
    s = sigma.reshape(sigma.shape[:4] + (1,) * extra + sigma.shape[-2:])
    s_inv = sigma_inv.reshape(s.shape)
    return fibre_integral(s @ values @ s_inv, h.grid)


def gram_matrix(h: MetricData, fr: HoloFrame) -> np.ndarray:
    """G_ij(b) = int_X tr(e_j e_i^{*h}), shape (Nb1, Nb2, dim, dim)."""
    basis_full = np.broadcast_to(fr.basis, h.grid.shape[:2] + fr.basis.shape)
    conj_means = _conjugated_fibre_means(h, basis_full)  # (Nb1, Nb2, dim_j, r, r)
    return np.einsum("...jab,...iab->...ij", conj_means, np.conj(fr.basis))


def moments(h: MetricData, fr: HoloFrame, f: FieldLike) -> np.ndarray:
    """m_i(b) = int_X tr(f e_i^{*h})."""
    means = _conjugated_fibre_means(h, _as_array(f))
    return np.einsum("...ab,...iab->...i", means, np.conj(fr.basis))


def _check_conditioning(gram: np.ndarray) -> None:
    cond = np.linalg.cond(gram)
    worst = float(np.max(cond))
    if not np.isfinite(worst) or worst > config.gram_cond_max:
        raise NumericalError(f"Gram system is ill-conditioned (condition number {worst:.3e} "
                             f"> {config.gram_cond_max:.1e})")


def _cholesky_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    lower = np.linalg.cholesky(gram)
    y = np.linalg.solve(lower, rhs[..., None])
    return np.linalg.solve(np.conj(np.swapaxes(lower, -1, -2)), y)[..., 0]


def pi(h: MetricData, fr: HoloFrame, f: FieldLike, pairing: str = "real") -> SectionF:
    """Fibrewise L^2(h) projection onto F.

    The real pairing solves the realified Gram system on the basis
    {e_j, i e_j}; the complex pairing solves G c = m directly.  Both give the
    same coefficients.

    Raises:
        NumericalError: if a Gram matrix has condition number above GRAM_COND_MAX.
    """
    if pairing not in PAIRINGS:
        raise ShapeError(f"unknown pairing {pairing!r}")
    gram = gram_matrix(h, fr)
    m = moments(h, fr, f)
    _check_conditioning(gram)
    if pairing == "complex":
        return SectionF(fr, _cholesky_solve(gram, m))
    real_gram = np.block([[gram.real, -gram.imag], [gram.imag, gram.real]])
    rhs = np.concatenate([m.real, m.imag], axis=-1)
    sol = _cholesky_solve(real_gram.astype(complex), rhs.astype(complex)).real
    d = fr.dim
    return SectionF(fr, sol[..., :d] + 1j * sol[..., d:])


def p(h: MetricData, fr: HoloFrame, f: FieldLike, trace_mode: str = "pointwise",
      pairing: str = "real") -> SectionF:
    """Trace-free part pi(f) - (tr pi(f) / r) id."""
    if trace_mode not in TRACE_MODES:
        raise ShapeError(f"unknown trace mode {trace_mode!r}")
    proj = pi(h, fr, f, pairing)
    if trace_mode == "pointwise":
        tr = trace(proj.matrices())
    else:
        tr = fibre_integral(trace(proj.field()), fr.grid)
    return SectionF(fr, proj.coeffs - (tr / fr.rank)[..., None] * fr.identity_coefficients())


def split_hs(h: MetricData, fr: HoloFrame, s: FieldLike) -> Tuple[SectionF, SectionF]:
    """(pi of the h-Hermitian part, pi of the h-skew-Hermitian part)."""
    arr = _as_array(s)
    star = h.adjoint(arr)
    return pi(h, fr, 0.5 * (arr + star)), pi(h, fr, 0.5 * (arr - star))


def decompose(h: MetricData, fr: HoloFrame, f: FieldLike) -> Tuple[np.ndarray, SectionF, np.ndarray]:
    """Split f into (scalar base function, trace-free part in F, L^2(h)-complement).

    f = psi_B id + psi_H + psi_R with psi_B = tr(pi f)/r, psi_H = p(f) and
    psi_R = f - pi(f).
    """
    arr = _as_array(f)
    proj = pi(h, fr, arr)
    psi_b = trace(proj.matrices()) / fr.rank
    psi_h = SectionF(fr, proj.coeffs - psi_b[..., None] * fr.identity_coefficients())
    return psi_b, psi_h, arr - proj.field()


def nabla_F(h: MetricData, fr: HoloFrame, s: SectionF, direction: str) -> SectionF:
    """Induced connection on F: pi(nabla_H s) for direction "w" or "wbar"."""
    if direction not in ("w", "wbar"):
        raise ShapeError(f"nabla_F acts along the base only, got {direction!r}")
    conn = chern_connection(h, fr.dolbeault)
    return pi(h, fr, conn.covariant_derivative(s.field(), direction))


def h_F(h: MetricData, fr: HoloFrame, s: FieldLike, t: FieldLike) -> np.ndarray:
    """Induced Hermitian form on F: int_X tr(s t^{*h}) as a base function."""
    s_arr, t_arr = _as_array(s), _as_array(t)
    return fibre_integral(trace(s_arr @ h.adjoint(t_arr)), h.grid)
