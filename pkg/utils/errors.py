"""Exception hierarchy shared by every package of the laboratory."""


class LabError(Exception):
    """Base class for all errors raised by the laboratory"""


class ConfigurationError(LabError, ValueError):
    """Invalid resolution, preset, parameter or incompatible initial data"""


class ShapeError(LabError, ValueError):
    """Array or form data with the wrong shape or missing components"""


class DomainError(LabError, ValueError):
    """Input outside the domain of an operation (non-positive metric, singular gauge, ...)"""


class NumericalError(LabError, ArithmeticError):
    """Ill-conditioned linear algebra"""


class AssumptionViolation(LabError):
    """A structural assumption of the discretisation does not hold"""


class ObstructionError(LabError):
    """The second-order construction is obstructed"""


class BlowUpError(NumericalError):
    """Non-finite values appeared while time stepping"""

    def __init__(self, step: int, time: float, message: str = ""):
        self.step = step
        self.time = time
        text = f"non-finite state at step {step} (t={time:.6g})"
        if message:
            text = f"{text}: {message}"
        super().__init__(text)
