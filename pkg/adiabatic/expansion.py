"""Adiabatic expansion of i Lambda_k F along dbar_s with s^2 = lambda / k."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from bundle.connection import contracted_curvature
from bundle.dolbeault import DolbeaultData, MetricData, family_member
from flow.monitors import interior_mask
from moment_map.nu import NuValue, nu
from projection.frames import HoloFrame, holo_frame
from projection.projections import p
from utils.errors import ConfigurationError
from utils.numerics import loglog_slope, sup_norm

logger = logging.getLogger(__name__)

EXACT_FLOOR = 1e-12


def coupling_parameter(lam: float, k: float) -> float:
    """s with s^2 = lambda / k."""
    if lam < 0 or k <= 0:
        raise ConfigurationError(f"need lambda >= 0 and k > 0, got lambda={lam}, k={k}")
    return float(np.sqrt(lam / k))


def check_k_list(k_list: Sequence[float]) -> List[float]:
    values = [float(k) for k in k_list]
    if not values or min(values) <= 0 or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigurationError(f"k values must be positive and strictly increasing, got {values}")
    return values


def _p_matrices(h: MetricData, fr: HoloFrame, values: np.ndarray) -> np.ndarray:
    return p(h, fr, values).matrices()


def adiabatic_defect(h: MetricData, d0: DolbeaultData, a: DolbeaultData, lam: float, k: float,
                     frame: Optional[HoloFrame] = None, nu_value: Optional[NuValue] = None) -> float:
    """sup_B |p(i Lambda_k F_s) - p(i Lambda_V F_0) - k^-1 (p(i Lambda_H F_0) - lambda i nu)|."""
    fr = holo_frame(d0) if frame is None else frame
    nu_value = nu(h, fr, a) if nu_value is None else nu_value
    ds = family_member(d0, a, coupling_parameter(lam, k))
    leading = _p_matrices(h, fr, contracted_curvature(h, ds, "k", k))
    vertical0 = _p_matrices(h, fr, contracted_curvature(h, d0, "V"))
    horizontal0 = _p_matrices(h, fr, contracted_curvature(h, d0, "H"))
    defect = leading - vertical0 - (horizontal0 - lam * nu_value.i_nu) / k
    return sup_norm(defect[interior_mask(h.grid, 2)])


@dataclass
class AdiabaticRun:
    """Defects of the expansion over a sweep in k."""

    k_values: List[float]
    lam: float
    defects: List[float]
    slope: Optional[float]
    exact: bool

    @property
    def s_values(self) -> List[float]:
        return [coupling_parameter(self.lam, k) for k in self.k_values]

    def rows(self) -> List[Dict[str, float]]:
        return [{"k": k, "s": s, "defect": d} for k, s, d in zip(self.k_values, self.s_values, self.defects)]

    def to_dict(self) -> Dict[str, Any]:
        return {"k_values": self.k_values, "lambda": self.lam, "defects": self.defects,
                "slope": self.slope, "exact_cancellation": self.exact}


def adiabatic_sweep(h: MetricData, d0: DolbeaultData, a: DolbeaultData, lam: float,
                    k_list: Sequence[float], frame: Optional[HoloFrame] = None) -> AdiabaticRun:
    """Defect for every k and the log-log slope of defect against k.

    Defects decay like k^{-3/2}, so the reported slope is the negative of the
    fitted exponent.  All defects below 1e-12 are reported as exact cancellation.
    """
    k_values = check_k_list(k_list)
    fr = holo_frame(d0) if frame is None else frame
    nu_value = nu(h, fr, a)
    defects = [adiabatic_defect(h, d0, a, lam, k, fr, nu_value) for k in k_values]
    exact = max(defects) < EXACT_FLOOR
    slope = None if exact or len(k_values) < 2 else -loglog_slope(k_values, defects)
    logger.debug("adiabatic defects %s, slope %s", defects, slope)
    return AdiabaticRun(k_values, float(lam), defects, slope, exact)
