"""Certified invariant-density enclosures for piecewise expanding interval maps."""
from .bounds import (
    CertifiedError,
    ContractionError,
    NormalizationError,
    aggregate_bounds,
    apriori_norm_bounds,
    best_error_bound,
    coarse_to_fine,
    error_bound,
    refine_submultiplicative,
    rkh,
    tail_sum,
)
from .discretization import IntervalSparseMatrix, Partition, SchemeKind, assemble, pullback, scheme_constants
from .dynamics import LYCoefficients, PiecewiseMap, dfly_coefficients, strong_norm_bound
from .eigensolver import ApproxFixedPoint, approximate_fixed_point, fixed_point, residuals
from .interval import Ival, bound_range, interval_newton
from .maps import CATALOG, doubling, lanford, linear, lorenz, map_from_config, nonlinear_nonmarkov, perturbed_4x
from .norms import NormBounds, norms_of_powers
from .observables import LyapunovEnclosure, lyapunov_enclosure
from .pipeline import RunReport, one_grid, run, two_grid

__version__ = "0.1.0"

__all__ = [
    "ApproxFixedPoint", "CATALOG", "CertifiedError", "ContractionError", "IntervalSparseMatrix", "Ival",
    "LYCoefficients", "LyapunovEnclosure", "NormBounds", "NormalizationError", "Partition", "PiecewiseMap",
    "RunReport", "SchemeKind", "aggregate_bounds", "apriori_norm_bounds", "approximate_fixed_point", "assemble",
    "best_error_bound", "bound_range", "coarse_to_fine", "dfly_coefficients", "error_bound", "fixed_point",
    "interval_newton", "lyapunov_enclosure", "map_from_config", "norms_of_powers", "one_grid", "pullback",
    "refine_submultiplicative", "residuals", "rkh", "run", "scheme_constants", "strong_norm_bound",
    "tail_sum", "two_grid", "doubling", "lanford", "linear", "lorenz", "nonlinear_nonmarkov", "perturbed_4x",
]
