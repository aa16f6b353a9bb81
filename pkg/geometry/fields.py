"""Matrix-valued fields and (1,1)-forms on the product grid."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from geometry.grid import ProductGrid
from utils.errors import ShapeError
from utils.numerics import dagger, hermitian_part, identity_field

FORM_COMPONENTS = ("zz", "zw", "wz", "ww")
DEGREE_TAGS = ("0", "dz", "dzbar", "dw", "dwbar")


@dataclass
class MatrixField:
    """Values of a matrix-valued function (or one form coefficient) on the grid.

    ``data`` has shape grid.shape + (r, r).  ``degree`` records which
    coefficient the data is ("0" for functions, "dzbar" for the coefficient of
    dz-bar, and so on).
    """

    grid: ProductGrid
    data: np.ndarray
    degree: str = "0"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 6 or self.data.shape[:4] != self.grid.shape or self.data.shape[4] != self.data.shape[5]:
            raise ShapeError(f"field of shape {self.data.shape} does not live on grid {self.grid.shape}")
        if self.degree not in DEGREE_TAGS:
            raise ShapeError(f"unknown degree tag {self.degree!r}")

    @property
    def rank(self) -> int:
        return self.data.shape[-1]

    @classmethod
    def zeros(cls, grid: ProductGrid, rank: int, degree: str = "0") -> "MatrixField":
        return cls(grid, np.zeros(grid.shape + (rank, rank), dtype=complex), degree)

    @classmethod
    def identity(cls, grid: ProductGrid, rank: int) -> "MatrixField":
        return cls(grid, identity_field(grid.shape, rank))

    @classmethod
    def from_base(cls, grid: ProductGrid, values: np.ndarray, degree: str = "0") -> "MatrixField":
        """Broadcast base data of shape (Nb1, Nb2, r, r) along the fibre."""
        values = np.asarray(values, dtype=complex)
        return cls(grid, np.broadcast_to(values, grid.shape[:2] + values.shape).copy(), degree)

    def adjoint(self) -> "MatrixField":
        return MatrixField(self.grid, dagger(self.data), self.degree)

    def hermitian(self) -> "MatrixField":
        return MatrixField(self.grid, hermitian_part(self.data), self.degree)

    def fibre_mean(self) -> np.ndarray:
        return np.einsum("ij,ij...->...", self.grid.fibre_weights, self.data)

    def __add__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField(self.grid, self.data + other.data, self.degree)

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField(self.grid, self.data - other.data, self.degree)

    def __mul__(self, scalar) -> "MatrixField":
        return MatrixField(self.grid, self.data * scalar, self.degree)

    __rmul__ = __mul__


@dataclass
class TwoForm:
    """A (1,1)-form stored through its coefficients of dz^dzbar, dz^dwbar, dw^dzbar, dw^dwbar.

    Any coefficient may be None when it was not computed.
    """

    grid: ProductGrid
    zz: Optional[np.ndarray] = None
    zw: Optional[np.ndarray] = None
    wz: Optional[np.ndarray] = None
    ww: Optional[np.ndarray] = None

    def component(self, name: str) -> np.ndarray:
        value = getattr(self, name, None) if name in FORM_COMPONENTS else None
        if value is None:
            raise ShapeError(f"form component {name!r} is missing")
        return value


def kahler_form(grid: ProductGrid, which: str, rank: int = 1) -> TwoForm:
    """omega_X = (i/2) dz^dzbar or omega_B = (i/2) dw^dwbar times the identity."""
    coeff = 0.5j * identity_field(grid.shape, rank)
    if which == "X":
        return TwoForm(grid, zz=coeff)
    if which == "B":
        return TwoForm(grid, ww=coeff)
    raise ShapeError(f"unknown Kahler form {which!r}")


def random_field(rng: np.random.Generator, grid: ProductGrid, rank: int,
                 hermitian: bool = False, max_mode: Optional[int] = None,
                 amplitude: float = 1.0, fibre_constant: bool = False) -> np.ndarray:
    """Random smooth field with Fourier modes |m| <= max_mode in periodic directions.

    The default keeps the lower third of each spectrum.  Radial directions use
    cos(pi m y) for m <= 3.
    """
    shape = grid.shape + (rank, rank)
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    axes = ("y1", "y2") if fibre_constant else ("x1", "x2", "y1", "y2")
    for name, axis in (("x1", 0), ("x2", 1), ("y1", 2), ("y2", 3)):
        n = grid.shape[axis]
        if name not in axes:
            data = np.repeat(np.take(data, [0], axis=axis), n, axis=axis)
            continue
        if grid.is_periodic(name):
            cutoff = max_mode if max_mode is not None else max(1, n // 3)
            freqs = np.abs(np.fft.fftfreq(n, d=1.0 / n))
            mask = (freqs <= cutoff).astype(float)
            shape_mask = [1] * data.ndim
            shape_mask[axis] = n
            data = np.fft.ifft(np.fft.fft(data, axis=axis) * mask.reshape(shape_mask), axis=axis)
        else:
            y = grid.coordinates[name]
            basis = np.stack([np.cos(np.pi * m * y) for m in range(4)], axis=1)
            coeffs = np.take(data, range(4), axis=axis)
            data = np.moveaxis(np.tensordot(basis, np.moveaxis(coeffs, axis, 0), axes=(1, 0)), 0, axis)
    data *= amplitude / max(np.max(np.abs(data)), 1e-300)
    return hermitian_part(data) if hermitian else data
