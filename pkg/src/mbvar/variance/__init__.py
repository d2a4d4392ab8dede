"""Return and variance estimators."""

from .decomposition import ChiDecomposition, ReturnDifference, chi_decomposition, return_difference
from .estimators import (
    ReturnSeries,
    VarianceReport,
    market_based_variance,
    mean_return,
    price_variance,
    return_series,
    taylor_variance,
    variance_oracle,
    variance_ratio,
    variance_report,
)
from .markowitz import (
    CovarianceMatrix,
    markowitz_difference,
    markowitz_market_variance,
    markowitz_portfolio_variance,
    return_covariances,
)
from .report import FullReport, MarkowitzComparison, full_report

__all__ = [
    "ChiDecomposition",
    "CovarianceMatrix",
    "FullReport",
    "MarkowitzComparison",
    "ReturnDifference",
    "ReturnSeries",
    "VarianceReport",
    "chi_decomposition",
    "full_report",
    "market_based_variance",
    "markowitz_difference",
    "markowitz_market_variance",
    "markowitz_portfolio_variance",
    "mean_return",
    "price_variance",
    "return_covariances",
    "return_difference",
    "return_series",
    "taylor_variance",
    "variance_oracle",
    "variance_ratio",
    "variance_report",
]
