__version__ = "0.1.0"

from experiments.supervisor import LabStep, LabSupervisor

__all__ = [
    "__version__",
    "LabStep",
    "LabSupervisor",
]
