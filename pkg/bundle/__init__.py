from bundle.dolbeault import DolbeaultData, MetricData, family_member, integrability_defect, is_integrable
from bundle.connection import ChernConnection, chern_connection, contracted_curvature, curvature, einstein_constants
from bundle.laplacian import laplacian
from bundle.gauge import conjugation_identity_residual, gauge_transform, metric_pullback
from bundle.linearisation import LinearisationReport, linearisation_defect
from bundle.presets import PRESETS, make_deformation

__all__ = [
    "DolbeaultData",
    "MetricData",
    "family_member",
    "integrability_defect",
    "is_integrable",
    "ChernConnection",
    "chern_connection",
    "contracted_curvature",
    "curvature",
    "einstein_constants",
    "laplacian",
    "conjugation_identity_residual",
    "gauge_transform",
    "metric_pullback",
    "LinearisationReport",
    "linearisation_defect",
    "PRESETS",
    "make_deformation",
]
