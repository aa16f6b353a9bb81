from adiabatic.expansion import AdiabaticRun, adiabatic_defect, adiabatic_sweep, coupling_parameter
from adiabatic.approximate import ApproximateSolution, approx_solution_r2, corrected_operator
from adiabatic.linearised import LOperator, hermitian_commutant_dimension, l_operator
from adiabatic.donaldson import DonaldsonReport, DonaldsonSettings, total_space_he_flow

__all__ = [
    "AdiabaticRun",
    "adiabatic_defect",
    "adiabatic_sweep",
    "coupling_parameter",
    "ApproximateSolution",
    "approx_solution_r2",
    "corrected_operator",
    "LOperator",
    "hermitian_commutant_dimension",
    "l_operator",
    "DonaldsonReport",
    "DonaldsonSettings",
    "total_space_he_flow",
]
