"""Meromorphic vanishing solutions of degenerate Painleve III at a = +-i/2."""

from .cache import CacheCorruptionError, CacheError, CoeffCache
from .coeffs import compute_cm, coeff_table, numeric_coefficients
from .exact import RationalPoly, nu2, val2
from .fence import verify_fence, z_formula
from .monodromy import find_varrho_roots, monodromy_point, nu_plus_one
from .numeric import SolutionParams, backlund_series_check, integrate, series_u

__all__ = [
    "CacheCorruptionError", "CacheError", "CoeffCache", "RationalPoly", "SolutionParams",
    "backlund_series_check", "coeff_table", "compute_cm", "find_varrho_roots", "integrate",
    "monodromy_point", "nu2", "nu_plus_one", "numeric_coefficients", "series_u", "val2",
    "verify_fence", "z_formula",
]
