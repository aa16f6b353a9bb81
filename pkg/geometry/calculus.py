"""Spectral / finite-difference calculus on the product grid.

Periodic directions are differentiated with FFTs; the annulus radial direction
uses the 4th-order stencil of ``ProductGrid.radial_derivative``.  The complex
derivatives follow d/dz = (d/dx1 - i d/dx2)/2 and d/dzbar = (d/dx1 + i d/dx2)/2.
"""
from typing import Optional, Union

import numpy as np
from scipy import fft

from geometry.fields import MatrixField, TwoForm
from geometry.grid import AXES, ProductGrid
from utils.errors import ShapeError
from utils.numerics import h_adjoint, trace

DIRECTIONS = {
    "z": ("x1", "x2", -1.0),
    "zbar": ("x1", "x2", 1.0),
    "w": ("y1", "y2", -1.0),
    "wbar": ("y1", "y2", 1.0),
}

# |dz|^2 = 2 and |dw|^2 = 2/k for omega_k; the volume form carries a factor k.
_NORM_FACTORS = {
    "function": lambda k: k,
    "horizontal": lambda k: 2.0,
    "vertical": lambda k: 2.0 * k,
}

ArrayOrField = Union[np.ndarray, MatrixField]


def _data(f: ArrayOrField) -> np.ndarray:
    return f.data if isinstance(f, MatrixField) else np.asarray(f)


def axis_derivative(arr: np.ndarray, grid: ProductGrid, name: str, axis: Optional[int] = None) -> np.ndarray:
    """Real partial derivative along one coordinate.

    ``axis`` defaults to the position of ``name`` on the full grid; pass
    ``axis=name_index - 2`` style offsets for base-only arrays.
    """
    axis = AXES[name] if axis is None else axis
    if grid.is_periodic(name):
        k = grid.wavenumbers[name]
        shape = [1] * arr.ndim
        shape[axis] = k.size
        return fft.ifft(1j * k.reshape(shape) * fft.fft(arr, axis=axis), axis=axis)
    d = grid.radial_derivative()
    moved = np.moveaxis(arr, axis, 0)
    out = (d @ moved.reshape(moved.shape[0], -1)).reshape(moved.shape)
    return np.moveaxis(out, 0, axis)


def complex_derivative(arr: np.ndarray, grid: ProductGrid, direction: str, base_only: bool = False) -> np.ndarray:
    if direction not in DIRECTIONS:
        raise ShapeError(f"unknown direction {direction!r}")
    a1, a2, sign = DIRECTIONS[direction]
    if base_only:
        if direction in ("z", "zbar"):
            raise ShapeError("base-only arrays have no fibre directions")
        ax1, ax2 = AXES[a1] - 2, AXES[a2] - 2
    else:
        ax1, ax2 = AXES[a1], AXES[a2]
    return 0.5 * (axis_derivative(arr, grid, a1, ax1) + sign * 1j * axis_derivative(arr, grid, a2, ax2))


def deriv(f: MatrixField, direction: str) -> MatrixField:
    """d/dz, d/dzbar, d/dw or d/dwbar of a field."""
    return MatrixField(f.grid, complex_derivative(f.data, f.grid, direction), f.degree)


def contract(form: TwoForm, mode: str, k: Optional[float] = None) -> np.ndarray:
    """Lambda contraction: "V" uses omega_X, "H" uses omega_B, "k" uses omega_k."""
    if mode == "V":
        return -2j * form.component("zz")
    if mode == "H":
        return -2j * form.component("ww")
    if mode == "k":
        k = form.grid.k if k is None else k
        return -2j * (form.component("zz") + form.component("ww") / k)
    raise ShapeError(f"unknown contraction mode {mode!r}")


def fibre_integral(f: ArrayOrField, grid: ProductGrid) -> np.ndarray:
    """Integral over X; returns base data of shape (Nb1, Nb2, ...)."""
    return np.tensordot(grid.fibre_weights, _data(f), axes=([0, 1], [0, 1]))


def base_integral(values: np.ndarray, grid: ProductGrid) -> np.ndarray:
    return np.tensordot(grid.base_weights, values, axes=([0, 1], [0, 1]))


def total_integral(f: ArrayOrField, grid: ProductGrid) -> np.ndarray:
    return base_integral(fibre_integral(f, grid), grid)


def pairing(f: ArrayOrField, g: ArrayOrField, grid: ProductGrid, kind: str = "function",
            k: Optional[float] = None, sigma: Optional[np.ndarray] = None) -> complex:
    """L^2(omega_k) inner product of two End(E)-valued coefficients, tr(f g^{*h})."""
    k = grid.k if k is None else k
    if kind not in _NORM_FACTORS:
        raise ShapeError(f"unknown norm kind {kind!r}")
    fd, gd = _data(f), _data(g)
    g_star = np.conj(np.swapaxes(gd, -1, -2)) if sigma is None else h_adjoint(gd, sigma)
    density = trace(fd @ g_star)
    return complex(_NORM_FACTORS[kind](k) * total_integral(density, grid))


def lp_norm(f: ArrayOrField, grid: ProductGrid, kind: str = "function",
            k: Optional[float] = None, sigma: Optional[np.ndarray] = None) -> float:
    return float(np.sqrt(max(pairing(f, f, grid, kind, k, sigma).real, 0.0)))
