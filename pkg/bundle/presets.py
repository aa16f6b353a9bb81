"""Named deformations a = a_V dzbar + a_H dwbar of the trivial operator."""
import json
from typing import Optional, Sequence, Union

import numpy as np

from bundle.dolbeault import DolbeaultData
from geometry.grid import ProductGrid
from utils.errors import ConfigurationError

NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
TRACE_FREE_DIAGONAL = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)

PRESETS = (
    "diagonal_zero",
    "nilpotent_constant",
    "annulus_mixed",
    "nilpotent_holomorphic",
    "fibre_varying",
    "custom",
)

# default horizontal coupling kappa in a_H = kappa a_V
DEFAULT_COUPLING = {
    "diagonal_zero": 0.0,
    "nilpotent_constant": 0.0,
    "annulus_mixed": 1.0,
    "nilpotent_holomorphic": 0.0,
    "fibre_varying": 0.0,
    "custom": 0.0,
}

ANNULUS_ONLY = ("annulus_mixed", "nilpotent_holomorphic")


def parse_custom_matrix(text: Union[str, Sequence]) -> np.ndarray:
    """Parse an r x r matrix written as nested [re, im] pairs (JSON text or lists)."""
    try:
        raw = json.loads(text) if isinstance(text, str) else text
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"custom deformation is not numeric: {exc}") from exc
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise ConfigurationError(f"custom deformation must have shape (r, r, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _holomorphic_exp(grid: ProductGrid) -> np.ndarray:
    """exp(2 pi i w) on the grid, w = y1 + i y2."""
    _, _, y1, y2 = grid.mesh()
    return np.exp(2j * np.pi * (y1 + 1j * y2))


def make_deformation(grid: ProductGrid, preset: str, rank: int = 2,
                     coupling: Optional[float] = None, epsilon: float = 0.5,
                     custom: Optional[Union[str, Sequence]] = None,
                     c1: float = 0.5, c2: float = 0.5) -> DolbeaultData:
    """Build the deformation a for a named preset.

    Args:
        grid: product grid
        preset: one of PRESETS
        rank: bundle rank (only diagonal_zero and custom allow r != 2)
        coupling: kappa in a_H = kappa a_V; defaults per preset
        epsilon: size of the exp(2 pi i w) N^T term of annulus_mixed
        custom: matrix for the custom preset
        c1, c2: coefficients of the fibre_varying preset

    Returns:
        DolbeaultData holding (a_V, a_H)
    """
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown deformation preset {preset!r}; choose from {', '.join(PRESETS)}")
    if preset in ANNULUS_ONLY and not grid.is_annulus:
        raise ConfigurationError(f"preset {preset!r} needs an annulus base")
    kappa = DEFAULT_COUPLING[preset] if coupling is None else float(coupling)
    ones = np.ones(grid.shape)[..., None, None]

    if preset == "diagonal_zero":
        a_v = np.zeros(grid.shape + (rank, rank), dtype=complex)
    elif preset == "custom":
        if custom is None:
            raise ConfigurationError("preset 'custom' needs a matrix")
        matrix = parse_custom_matrix(custom)
        if matrix.shape != (rank, rank):
            raise ConfigurationError(f"custom matrix has rank {matrix.shape[0]}, bundle rank is {rank}")
        a_v = ones * matrix
    else:
        if rank != 2:
            raise ConfigurationError(f"preset {preset!r} is defined for rank 2 only")
        if preset == "nilpotent_constant":
            a_v = ones * NILPOTENT
        elif preset == "annulus_mixed":
            a_v = ones * NILPOTENT + epsilon * _holomorphic_exp(grid)[..., None, None] * NILPOTENT.T
        elif preset == "nilpotent_holomorphic":
            a_v = _holomorphic_exp(grid)[..., None, None] * NILPOTENT
        else:
            if kappa != 0.0:
                raise ConfigurationError("fibre_varying has no integrable horizontal coupling")
            _, x2, _, _ = grid.mesh()
            a_v = (1j * c1 * ones * TRACE_FREE_DIAGONAL
                   + c2 * np.cos(2.0 * np.pi * x2)[..., None, None] * PAULI_X)
    return DolbeaultData(grid, a_v, kappa * a_v, name=preset)
