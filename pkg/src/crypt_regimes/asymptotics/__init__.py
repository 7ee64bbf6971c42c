"""Asymptotic regimes: rate laws, classification, limit laws and rate sums."""

from .classify import Regime, classify_null, classify_theorem1, scaling_factor
from .laws import (
    BernoulliMix,
    Exp1,
    Hypoexp,
    LimitLaw,
    NullBoundarySigma,
    NullBoundaryTau,
    PointMass,
    Rayleigh,
    UniformInterval,
    limit_cdf,
    limit_pdf,
    sample_limit,
)
from .rates import Comparison, Order, RateExpr, compare_orders
from .ratesum import (
    rate_sum_ratio,
    successful_rate_asymptote,
    successful_rate_asymptote_log2,
    successful_rate_sum,
    successful_rate_sum_log2,
)
