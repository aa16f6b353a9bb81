from geometry.grid import ProductGrid
from geometry.fields import MatrixField, TwoForm, kahler_form, random_field
from geometry.calculus import (
    complex_derivative,
    contract,
    deriv,
    fibre_integral,
    lp_norm,
    pairing,
    total_integral,
)

__all__ = [
    "ProductGrid",
    "MatrixField",
    "TwoForm",
    "kahler_form",
    "random_field",
    "complex_derivative",
    "contract",
    "deriv",
    "fibre_integral",
    "lp_norm",
    "pairing",
    "total_integral",
]
