"""Discretisation of the product X x B.

X is the square torus [0,1)^2 with coordinate z = x1 + i x2.  B is either a
torus (w = y1 + i y2, both periodic) or an annulus, which is modelled as the
flat cylinder S^1 x [0,1] (y1 periodic, y2 radial with both endpoints on the
grid).  Arrays on the product are laid out as (x1, x2, y1, y2, r, r).
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
import scipy.sparse as sp

from utils.errors import ConfigurationError

AXES: Dict[str, int] = {"x1": 0, "x2": 1, "y1": 2, "y2": 3}
BASE_KINDS = ("torus", "annulus")

# 4th-order first derivative stencils (times 1/(12h))
_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
_ROW0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_ROW1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def fourier_wavenumbers(n: int) -> np.ndarray:
    """Angular wavenumbers 2 pi m for a unit period, with the Nyquist mode zeroed."""
    m = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        m[n // 2] = 0.0
    return 2.0 * np.pi * m


def fourier_derivative_matrix(n: int) -> np.ndarray:
    """Dense first-derivative matrix of the Fourier interpolant (Nyquist dropped)."""
    eye = np.eye(n)
    k = fourier_wavenumbers(n)
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(eye, axis=0), axis=0))


def radial_derivative_matrix(n: int) -> sp.csr_matrix:
    """4th-order finite-difference d/dy on n uniform nodes of [0, 1], endpoints included."""
    if n < 5:
        raise ConfigurationError(f"radial direction needs at least 5 nodes, got {n}")
    h = 1.0 / (n - 1)
    d = sp.lil_matrix((n, n))
    d[0, 0:5] = _ROW0
    d[1, 0:5] = _ROW1
    for i in range(2, n - 2):
        d[i, i - 2:i + 3] = _INTERIOR
    d[n - 2, n - 5:n] = -_ROW1[::-1]
    d[n - 1, n - 5:n] = -_ROW0[::-1]
    return (d / (12.0 * h)).tocsr()


def _radial_weights(n: int) -> np.ndarray:
    h = 1.0 / (n - 1)
    if n % 2 == 1:
        w = np.ones(n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True, eq=False)
class ProductGrid:
    """Tensor grid on X x B with the adiabatic parameter k.

    Attributes:
        fibre_size: nodes per direction on X (even, >= 4)
        base_kind: "torus" or "annulus"
        base_size: (angular/first, radial/second) node counts on B
        k: adiabatic parameter, scaling omega_k = omega_X + k omega_B
    """

    fibre_size: int
    base_kind: str = "torus"
    base_size: Tuple[int, int] = (8, 8)
    k: float = 1.0
    coordinates: Dict[str, np.ndarray] = field(init=False, repr=False)
    wavenumbers: Dict[str, np.ndarray] = field(init=False, repr=False)
    fibre_weights: np.ndarray = field(init=False, repr=False)
    base_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nf = int(self.fibre_size)
        nb = tuple(int(n) for n in self.base_size)
        if nf < 4 or nf % 2:
            raise ConfigurationError(f"fibre resolution must be even and >= 4, got {nf}")
        if self.base_kind not in BASE_KINDS:
            raise ConfigurationError(f"unknown base kind {self.base_kind!r}")
        if len(nb) != 2:
            raise ConfigurationError("base_size must be a pair")
        if nb[0] < 4 or nb[0] % 2:
            raise ConfigurationError(f"periodic base resolution must be even and >= 4, got {nb[0]}")
        if self.base_kind == "torus" and (nb[1] < 4 or nb[1] % 2):
            raise ConfigurationError(f"periodic base resolution must be even and >= 4, got {nb[1]}")
        if self.base_kind == "annulus" and nb[1] < 5:
            raise ConfigurationError(f"annulus radial resolution must be >= 5, got {nb[1]}")
        if not self.k > 0:
            raise ConfigurationError(f"k must be positive, got {self.k}")
        object.__setattr__(self, "base_size", nb)

        coords = {
            "x1": np.arange(nf) / nf,
            "x2": np.arange(nf) / nf,
            "y1": np.arange(nb[0]) / nb[0],
        }
        waves = {"x1": fourier_wavenumbers(nf), "x2": fourier_wavenumbers(nf),
                 "y1": fourier_wavenumbers(nb[0])}
        if self.base_kind == "torus":
            coords["y2"] = np.arange(nb[1]) / nb[1]
            waves["y2"] = fourier_wavenumbers(nb[1])
            radial_w = np.full(nb[1], 1.0 / nb[1])
        else:
            coords["y2"] = np.linspace(0.0, 1.0, nb[1])
            radial_w = _radial_weights(nb[1])
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "wavenumbers", waves)
        object.__setattr__(self, "fibre_weights", np.full((nf, nf), 1.0 / nf ** 2))
        object.__setattr__(self, "base_weights", np.outer(np.full(nb[0], 1.0 / nb[0]), radial_w))

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.fibre_size, self.fibre_size) + self.base_size

    @property
    def base_shape(self) -> Tuple[int, int]:
        return self.base_size

    @property
    def is_annulus(self) -> bool:
        return self.base_kind == "annulus"

    def is_periodic(self, axis: str) -> bool:
        return not (axis == "y2" and self.is_annulus)

    def with_k(self, k: float) -> "ProductGrid":
        return ProductGrid(self.fibre_size, self.base_kind, self.base_size, k)

    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the full 4d grid (x1, x2, y1, y2)."""
        return np.meshgrid(*(self.coordinates[a] for a in AXES), indexing="ij")

    def base_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.coordinates["y1"], self.coordinates["y2"], indexing="ij")

    def radial_derivative(self) -> sp.csr_matrix:
        return radial_derivative_matrix(self.base_size[1])

    def boundary_mask(self) -> np.ndarray:
        """Boolean base mask of the Dirichlet boundary rows (empty on a torus)."""
        mask = np.zeros(self.base_size, dtype=bool)
        if self.is_annulus:
            mask[:, 0] = True
            mask[:, -1] = True
        return mask

    def derivative_matrix(self, axis: str) -> np.ndarray:
        """Dense first-derivative matrix along one base or fibre axis."""
        n = self.shape[AXES[axis]]
        if self.is_periodic(axis):
            return fourier_derivative_matrix(n)
        return self.radial_derivative().toarray()

    def spectral_radius(self, part: str) -> float:
        """Spectral radius of Delta^{1,0} = -1/2 (D1^2 + D2^2) on one factor."""
        if part == "V":
            kmax = np.max(np.abs(self.wavenumbers["x1"]))
            return float(kmax ** 2)
        if part != "H":
            raise ConfigurationError(f"unknown factor {part!r}")
        total = np.max(np.abs(self.wavenumbers["y1"])) ** 2
        if self.is_annulus:
            d = self.radial_derivative().toarray()
            total += np.max(np.abs(np.linalg.eigvals(d @ d)))
        else:
            total += np.max(np.abs(self.wavenumbers["y2"])) ** 2
        return 0.5 * float(total)

    def base_laplacian(self) -> sp.csr_matrix:
        """Positive base Laplacian -(D1^2 + D2^2) on flattened base values.

        Built from the same first-derivative operators as the field calculus,
        so its spectrum matches the discrete flow.
        """
        n1, n2 = self.base_size
        d1 = sp.csr_matrix(self.derivative_matrix("y1"))
        d2 = self.radial_derivative() if self.is_annulus else sp.csr_matrix(self.derivative_matrix("y2"))
        lap = sp.kron(d1 @ d1, sp.identity(n2)) + sp.kron(sp.identity(n1), d2 @ d2)
        return (-lap).tocsr()

    def describe(self) -> Dict[str, object]:
        return {
            "fibre_size": self.fibre_size,
            "base_kind": self.base_kind,
            "base_size": list(self.base_size),
            "k": self.k,
        }
