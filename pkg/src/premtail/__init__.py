"""Heavy-tail distribution fitting for premium series.

Lognormal, GEV and GPD maximum-likelihood fits, block-maxima and
peaks-over-threshold pipelines, tail diagnostics and KS / chi-square /
Anderson-Darling goodness-of-fit tests.
"""

from .distributions import GevParams, GpdParams, LognormalParams, log_likelihood
from .estimation import FitResult, fit_block_maxima, fit_gev, fit_gpd, fit_lognormal, fit_pot, residuals
from .extremes import BlockSpec, Sample, exceedances, hill_series, select_threshold
from .gof import GofResult, ad_test, chi_square_test, decision, ks_test, run_tests
from .numerics import SeededRng

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "FitResult",
    "GevParams",
    "GofResult",
    "GpdParams",
    "LognormalParams",
    "Sample",
    "SeededRng",
    "ad_test",
    "chi_square_test",
    "decision",
    "exceedances",
    "fit_block_maxima",
    "fit_gev",
    "fit_gpd",
    "fit_lognormal",
    "fit_pot",
    "hill_series",
    "ks_test",
    "log_likelihood",
    "residuals",
    "run_tests",
    "select_threshold",
]
