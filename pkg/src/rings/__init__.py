"""
Rings package: truncated p-adic coefficients, residue fields and Laurent series.
"""

from .coeff_ring import (AtLeast, Coeff, CoeffRingSpec, coeff_valuation, default_defining_polynomial,
                         embed_coeff, embed_extension, make_spec)
from .residue_field import ResidueField
from .series_ring import INF, PrecisionProfile, ResidueSeries, Series, gauss_val, series_invert

__all__ = [
    'AtLeast', 'Coeff', 'CoeffRingSpec', 'coeff_valuation', 'default_defining_polynomial',
    'embed_coeff', 'embed_extension', 'make_spec', 'ResidueField',
    'INF', 'PrecisionProfile', 'ResidueSeries', 'Series', 'gauss_val', 'series_invert'
]
