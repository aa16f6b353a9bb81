from .errors import (
    AssumptionViolation,
    BlowUpError,
    ConfigurationError,
    DomainError,
    LabError,
    NumericalError,
    ObstructionError,
    ShapeError,
)

from .workflow_utils import (
    StepStatus,
    WorkflowState,
    WorkflowStatus,
    format_workflow_report,
    log_workflow_step,
)

__all__ = [
    # Errors
    "AssumptionViolation",
    "BlowUpError",
    "ConfigurationError",
    "DomainError",
    "LabError",
    "NumericalError",
    "ObstructionError",
    "ShapeError",

    # Run state
    "StepStatus",
    "WorkflowState",
    "WorkflowStatus",
    "format_workflow_report",
    "log_workflow_step",
]
