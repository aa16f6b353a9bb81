"""Monitored quantities of the family flow: theta, eta, det drift and the heat subsolution defect."""
from typing import Optional, Sequence

import numpy as np

from geometry.calculus import axis_derivative
from geometry.grid import ProductGrid
from utils.errors import ConfigurationError
from utils.numerics import trace


def theta(p_matrices: np.ndarray) -> np.ndarray:
    """|P|^2 in the induced metric, int_X tr(P^2), for fibre-constant P (unit fibre volume)."""
    return np.real(trace(p_matrices @ p_matrices))


def beta(sigma: np.ndarray, tau: np.ndarray) -> np.ndarray:
    return np.real(trace(np.linalg.solve(sigma, tau)))


def eta(sigma: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """beta(sigma, tau) + beta(tau, sigma) - 2 r, a base function that vanishes iff sigma = tau."""
    r = sigma.shape[-1]
    return beta(sigma, tau) + beta(tau, sigma) - 2.0 * r


def det_drift(u: np.ndarray, u0: np.ndarray) -> float:
    """max |log det sigma - log det sigma_0| = max |tr u - tr u_0|."""
    return float(np.max(np.abs(np.real(trace(u) - trace(u0)))))


def base_heat_operator(values: np.ndarray, grid: ProductGrid) -> np.ndarray:
    """Delta_B = 2 Delta_B^{1,0} = -(d1^2 + d2^2) on scalar base data."""
    total = np.zeros_like(values, dtype=complex)
    for name, axis in (("y1", 0), ("y2", 1)):
        total += axis_derivative(axis_derivative(values, grid, name, axis), grid, name, axis)
    return -np.real(total)


def interior_mask(grid: ProductGrid, margin: int = 1) -> np.ndarray:
    """Base nodes away from the Dirichlet boundary (every node on a torus)."""
    mask = np.ones(grid.base_size, dtype=bool)
    if grid.is_annulus:
        mask[:, :margin] = False
        mask[:, -margin:] = False
    return mask


def time_derivative(snapshots: np.ndarray, spacing: float) -> np.ndarray:
    """Centred time derivative at interior snapshots.

    Uses the 4th-order five-point stencil when at least five snapshots are
    available and the 2nd-order three-point stencil otherwise.  The result
    is aligned with snapshots[offset:-offset] where offset is 2 or 1.
    """
    if snapshots.shape[0] >= 5:
        return (-snapshots[4:] + 8.0 * snapshots[3:-1] - 8.0 * snapshots[1:-3] + snapshots[:-4]) / (12.0 * spacing)
    return (snapshots[2:] - snapshots[:-2]) / (2.0 * spacing)


def subsolution_defect(snapshots: Sequence[np.ndarray], times: Sequence[float], grid: ProductGrid,
                       mask: Optional[np.ndarray] = None) -> float:
    """max over interior (t, b) of (d_t theta + Delta_B theta)_+ from uniformly spaced snapshots."""
    stack = np.asarray(snapshots, dtype=float)
    times = np.asarray(times, dtype=float)
    if stack.shape[0] < 3:
        return 0.0
    spacing = float(times[1] - times[0])
    if not np.allclose(np.diff(times), spacing, rtol=1e-9, atol=1e-15):
        raise ConfigurationError("theta snapshots must be uniformly spaced in time")
    dtheta = time_derivative(stack, spacing)
    offset = (stack.shape[0] - dtheta.shape[0]) // 2
    inner = stack[offset:stack.shape[0] - offset]
    heat = np.stack([base_heat_operator(s, grid) for s in inner])
    mask = interior_mask(grid, 2) if mask is None else mask
    values = (dtheta + heat)[:, mask]
    return float(max(np.max(values, initial=0.0), 0.0))
