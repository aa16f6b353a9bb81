from moment_map.symplectic import complex_structure, infinitesimal_action, omega_pair
from moment_map.nu import DeformationData, NuValue, expansion_defect, expansion_nu, nu, nu_trace_defect

__all__ = [
    "complex_structure",
    "infinitesimal_action",
    "omega_pair",
    "DeformationData",
    "NuValue",
    "expansion_defect",
    "expansion_nu",
    "nu",
    "nu_trace_defect",
]
