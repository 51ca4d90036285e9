"""
Linear algebra over the series ring: matrices, σ-linear solving and residue factorization.
"""

from .laurent_factor import (ElementaryMove, LaurentPoly, LaurentPolyMatrix, factor_elementary,
                             laurent_det_unit, lift_matrix, lift_to_series)
from .series_matrix import SeriesMatrix
from .sigma_linear import (DiagonalData, NewtonPolygon, SigmaEquationSolver, genspec_diagonalize,
                           newton_polygon_generic, smith_valuations, solve_sigma_equation, twisted_product)

__all__ = [
    'ElementaryMove', 'LaurentPoly', 'LaurentPolyMatrix', 'factor_elementary', 'laurent_det_unit',
    'lift_matrix', 'lift_to_series', 'SeriesMatrix', 'DiagonalData', 'NewtonPolygon', 'SigmaEquationSolver',
    'genspec_diagonalize', 'newton_polygon_generic', 'smith_valuations', 'solve_sigma_equation',
    'twisted_product'
]
