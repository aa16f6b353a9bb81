from flow.family_flow import (
    FlowProblem,
    FlowReport,
    FlowSettings,
    FlowState,
    P_op,
    flow_run,
    flow_step,
    max_stable_dt,
)
from flow.monitors import det_drift, eta, subsolution_defect, theta
from flow.dirichlet import DirichletResult, dirichlet_eigenvalue, dirichlet_solve
from flow.diagnostics import (
    curvature_evolution_residual,
    family_he_residual,
    linearised_P,
    moment_map_evolution_residual,
    uniqueness_run,
)

__all__ = [
    # Flow core
    "FlowProblem",
    "FlowReport",
    "FlowSettings",
    "FlowState",
    "P_op",
    "flow_run",
    "flow_step",
    "max_stable_dt",

    # Monitors
    "det_drift",
    "eta",
    "subsolution_defect",
    "theta",

    # Boundary problem
    "DirichletResult",
    "dirichlet_eigenvalue",
    "dirichlet_solve",

    # Evolution identities
    "curvature_evolution_residual",
    "family_he_residual",
    "linearised_P",
    "moment_map_evolution_residual",
    "uniqueness_run",
]
