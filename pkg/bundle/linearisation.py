"""Finite-difference check of the linearised contracted curvature.

For an h-self-adjoint sigma:

    d/dt i Lambda F_{h exp(t sigma), dbar} |_{t=0} = Delta^{1,0} sigma
    d/dt i Lambda F_{h, exp(t sigma) . dbar} |_{t=0} = Delta sigma

The forward quotient differs from the derivative by O(t), so the defect
over a geometric sequence of steps has log-log slope one.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from bundle.connection import contracted_curvature
from bundle.dolbeault import DolbeaultData, MetricData
from bundle.gauge import gauge_transform
from bundle.laplacian import laplacian
from utils.errors import DomainError, ShapeError
from utils.numerics import dagger, expm_herm, loglog_slope, sup_norm

logger = logging.getLogger(__name__)

STEPS = (1e-2, 1e-3, 1e-4)
KINDS = {"metric": "(1,0)", "gauge": "full"}
SELF_ADJOINT_TOL = 1e-10


@dataclass
class LinearisationReport:
    kind: str
    mode: str
    steps: Tuple[float, ...]
    errors: Tuple[float, ...]
    slope: float

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "mode": self.mode, "steps": list(self.steps),
                "errors": list(self.errors), "slope": self.slope}


def _check_self_adjoint(h: MetricData, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != h.sigma.shape:
        raise ShapeError(f"sigma has shape {sigma.shape}, expected {h.sigma.shape}")
    lowered = h.sigma @ sigma
    scale = max(1.0, sup_norm(lowered))
    if sup_norm(lowered - dagger(lowered)) > SELF_ADJOINT_TOL * scale:
        raise DomainError("sigma is not self-adjoint with respect to h")
    return sigma


def exp_self_adjoint(h: MetricData, sigma: np.ndarray, t: float) -> np.ndarray:
    """exp(t sigma) through the Hermitian matrix h^{1/2} sigma h^{-1/2}."""
    root, root_inv = h.sqrt(), h.inv_sqrt()
    return root_inv @ expm_herm(t * (root @ sigma @ root_inv)) @ root


def perturbed_metric(h: MetricData, sigma: np.ndarray, t: float) -> MetricData:
    """The metric h exp(t sigma), written h^{1/2} exp(t X) h^{1/2} so it stays Hermitian."""
    root, root_inv = h.sqrt(), h.inv_sqrt()
    return MetricData(h.grid, root @ expm_herm(t * (root @ sigma @ root_inv)) @ root)


def linearisation_defect(h: MetricData, d: DolbeaultData, sigma: np.ndarray, kind: str = "metric",
                         mode: str = "k", k: Optional[float] = None,
                         steps: Sequence[float] = STEPS) -> LinearisationReport:
    """Relative sup defect of the forward quotient of i Lambda F against its Laplacian.

    kind "metric" moves h to h exp(t sigma) and compares with Delta^{1,0} sigma;
    kind "gauge" moves dbar to exp(t sigma) . dbar and compares with Delta sigma.
    """
    if kind not in KINDS:
        raise ShapeError(f"unknown linearisation kind {kind!r}")
    sigma = _check_self_adjoint(h, sigma)
    base = contracted_curvature(h, d, mode, k)
    target = laplacian(h, d, KINDS[kind], mode, sigma, k)
    scale = max(1.0, sup_norm(target))
    errors = []
    for t in steps:
        if kind == "metric":
            moved = contracted_curvature(perturbed_metric(h, sigma, t), d, mode, k)
        else:
            moved = contracted_curvature(h, gauge_transform(exp_self_adjoint(h, sigma, t), d), mode, k)
        errors.append(sup_norm((moved - base) / t - target) / scale)
    slope = loglog_slope(steps, errors)
    logger.debug("linearisation %s/%s: errors %s, slope %.3f", kind, mode, errors, slope)
    return LinearisationReport(kind, mode, tuple(float(t) for t in steps), tuple(errors), slope)
