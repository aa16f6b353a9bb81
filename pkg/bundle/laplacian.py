"""Laplacians of the induced connection on End(E).

With Lambda(phi dz^dzbar) = -2i phi:

    Delta^{1,0}_V s = -2 nabla_zbar nabla_z s,   Delta^{0,1}_V s = -2 nabla_z nabla_zbar s

and the same with (w, wbar) for the horizontal factor.  Mode "k" combines
them as V + H/k.
"""
from typing import Optional

import numpy as np

from bundle.connection import ChernConnection, chern_connection
from bundle.dolbeault import DolbeaultData, MetricData
from utils.errors import ShapeError

KINDS = ("full", "(1,0)", "(0,1)")

_FACTORS = {"V": ("z", "zbar"), "H": ("w", "wbar")}


def _half_laplacian(conn: ChernConnection, s: np.ndarray, kind: str, factor: str) -> np.ndarray:
    holo, anti = _FACTORS[factor]
    if kind == "(1,0)":
        return -2.0 * conn.covariant_derivative(conn.covariant_derivative(s, holo), anti)
    return -2.0 * conn.covariant_derivative(conn.covariant_derivative(s, anti), holo)


def connection_laplacian(conn: ChernConnection, s: np.ndarray, kind: str, mode: str,
                         k: Optional[float] = None) -> np.ndarray:
    if kind not in KINDS:
        raise ShapeError(f"unknown Laplacian kind {kind!r}")
    if mode not in ("V", "H", "k"):
        raise ShapeError(f"unknown contraction mode {mode!r}")
    kinds = ("(1,0)", "(0,1)") if kind == "full" else (kind,)
    if mode == "k":
        k = conn.grid.k if k is None else k
        weights = (("V", 1.0), ("H", 1.0 / k))
    else:
        weights = ((mode, 1.0),)
    out = np.zeros_like(s, dtype=complex)
    for factor, weight in weights:
        for part in kinds:
            out = out + weight * _half_laplacian(conn, s, part, factor)
    return out


def laplacian(h: MetricData, d: DolbeaultData, kind: str, mode: str, s: np.ndarray,
              k: Optional[float] = None) -> np.ndarray:
    """Delta^{1,0}, Delta^{0,1} or their sum applied to an End(E)-section s."""
    return connection_laplacian(chern_connection(h, d), np.asarray(s, dtype=complex), kind, mode, k)
