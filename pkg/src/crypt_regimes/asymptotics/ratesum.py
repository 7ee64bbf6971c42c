"""Rate at which daughter type-1 mutations turn out successful.

Everything is carried in log2 so that ``l`` in the thousands, where rates
such as ``N**-0.5`` leave double range, is handled directly.
"""

from __future__ import annotations

import math

import numpy as np

from .rates import RateExpr


def _log2_rate(rate, l: int) -> float:
    if isinstance(rate, RateExpr):
        return rate.log2_at(l)
    rate = float(rate)
    if rate < 0:
        raise ValueError("rates must be nonnegative")
    return math.log2(rate) if rate > 0 else -math.inf


def _log2_one_minus_exp_neg(log2x: np.ndarray) -> np.ndarray:
    """log2(1 - exp(-x)) from log2(x), accurate for tiny and huge x."""
    out = np.empty_like(log2x)
    tiny = log2x < -40
    huge = log2x > 10
    mid = ~(tiny | huge)
    # 1 - e^-x = x (1 - x/2 + ...) for tiny x
    out[tiny] = log2x[tiny] - np.exp2(log2x[tiny]) / (2 * math.log(2))
    out[huge] = np.log1p(-np.exp(-np.exp2(np.minimum(log2x[huge], 1000.0)))) / math.log(2)
    out[mid] = np.log2(-np.expm1(-np.exp2(log2x[mid])))
    return out


def _indices(l: int, beta1: float, beta2: float) -> np.ndarray:
    if beta1 > beta2:
        raise ValueError("need beta1 <= beta2")
    lo = math.floor(l * beta1) + 1
    hi = math.floor(l * beta2)
    return np.arange(max(lo, 1), min(hi, l) + 1, dtype=np.int64)


def successful_rate_sum_log2(l: int, v1, v2, C: float = 1.0, Cprime: float = 2.0,
                             beta1: float = 0.0, beta2: float = 1.0) -> float:
    """log2 of sum over integer i in (l*beta1, l*beta2] of
    v1 2**(i-1) (1 - exp(-C v2 (2**(l-i+1) - Cprime)))."""
    if C <= 0 or Cprime <= 0:
        raise ValueError("C and Cprime must be positive")
    i = _indices(l, beta1, beta2)
    lv1, lv2 = _log2_rate(v1, l), _log2_rate(v2, l)
    if i.size == 0 or lv1 == -math.inf or lv2 == -math.inf:
        return -math.inf
    e = (l - i + 1).astype(float)
    # log2(2**e - C') = e + log2(1 - C' 2**-e); nonpositive counts contribute nothing
    frac = 1.0 - Cprime * np.exp2(-e)
    keep = frac > 0
    if not keep.any():
        return -math.inf
    i, e, frac = i[keep], e[keep], frac[keep]
    log2x = math.log2(C) + lv2 + e + np.log2(frac)
    terms = lv1 + (i - 1) + _log2_one_minus_exp_neg(log2x)
    return float(np.logaddexp2.reduce(terms))


def successful_rate_sum(l: int, v1, v2, C: float = 1.0, Cprime: float = 2.0,
                        beta1: float = 0.0, beta2: float = 1.0) -> float:
    return 2.0 ** successful_rate_sum_log2(l, v1, v2, C, Cprime, beta1, beta2)


def successful_rate_asymptote_log2(l: int, v1, v2, alpha: float, C: float = 1.0,
                                   beta1: float = 0.0, beta2: float = 1.0) -> float:
    """log2 of C (beta2 - max(beta1, 1 - alpha))^+ v1 v2 N log2 N."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    width = beta2 - max(beta1, 1.0 - alpha)
    if width <= 0:
        return -math.inf
    return math.log2(C * width) + _log2_rate(v1, l) + _log2_rate(v2, l) + l + math.log2(l)


def successful_rate_asymptote(l: int, v1, v2, alpha: float, C: float = 1.0,
                              beta1: float = 0.0, beta2: float = 1.0) -> float:
    return 2.0 ** successful_rate_asymptote_log2(l, v1, v2, alpha, C, beta1, beta2)


def rate_sum_ratio(l: int, v1, v2, alpha: float, C: float = 1.0, Cprime: float = 2.0,
                   beta1: float = 0.0, beta2: float = 1.0) -> float:
    """Sum divided by its asymptote, without leaving log space."""
    a = successful_rate_sum_log2(l, v1, v2, C, Cprime, beta1, beta2)
    b = successful_rate_asymptote_log2(l, v1, v2, alpha, C, beta1, beta2)
    return 2.0 ** (a - b)
