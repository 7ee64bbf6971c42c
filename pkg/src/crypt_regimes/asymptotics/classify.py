"""Regime classification for general rates and for the equal-rate null model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..core import ConfigError, CryptConfig
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
)
from .rates import Order, RateExpr, compare_orders

T1_1, T1_2, T1_3, T1_4 = "T1.1", "T1.2", "T1.3", "T1.4"
T1_5_DISTINCT, T1_5_PROPORTIONAL = "T1.5-distinct", "T1.5-proportional"
NULL_CASES = tuple(f"NULL.{k}" for k in range(1, 8))
DEGENERATE = "degenerate-finite-time"
BOUNDARY = "boundary-unsupported"

_SCALING = {
    T1_1: "min(alpha,1)*v1*v2*N*log2(N)",
    T1_2: "sqrt(v1*v2*N)",
    T1_3: "sqrt(v1*v2*N)",
    T1_4: "u1",
    T1_5_DISTINCT: "u1",
    T1_5_PROPORTIONAL: "u1",
    "NULL.1": "mu",
    "NULL.2": "(1+A)*mu",
    "NULL.3": "min(alpha,1)*mu^2*N*log2(N)",
    "NULL.4": "1/log2(N)",
    "NULL.5": "sqrt(N)*mu",
    "NULL.7": "sqrt(N)*mu",
}


@dataclass(frozen=True)
class Regime:
    case: str
    alpha: Optional[float]
    tau_law: Optional[LimitLaw] = None
    sigma_law: Optional[LimitLaw] = None
    rho_law: Optional[LimitLaw] = None
    A: Optional[float] = None
    path: Optional[str] = None  # path whose fraction should tend to 1
    null_model: bool = False
    reason: str = ""

    @property
    def scaling(self) -> Optional[str]:
        return _SCALING.get(self.case)

    @property
    def verifiable(self) -> bool:
        return self.tau_law is not None

    def to_dict(self) -> dict:
        law = lambda x: None if x is None else x.describe()
        out = {
            "case": self.case,
            "alpha": self.alpha,
            "scaling": self.scaling,
            "tau_law": law(self.tau_law),
            "sigma_law": law(self.sigma_law),
            "rho_law": law(self.rho_law),
            "path": self.path,
        }
        if self.A is not None:
            out["A"] = self.A
        if self.reason:
            out["reason"] = self.reason
        return out


def _alpha(v2: RateExpr) -> Fraction:
    a = -v2.p
    if a <= 0:
        raise ConfigError("alpha-nonpositive", f"v2 exponent {v2.p} gives alpha <= 0")
    return a


def _sigma_uniform(alpha: Fraction) -> UniformInterval:
    return UniformInterval(float(max(1 - alpha, Fraction(0))), 1.0)


def _check_order(small: RateExpr, big: RateExpr, names: str) -> None:
    c = compare_orders(small, big)
    if c.order is Order.MUCH_GREATER or (c.order is Order.SAME and c.ratio > 1):
        raise ConfigError("ordering-violation", f"{names}: rate laws violate the ordering restriction")


def _boundary(alpha, what: str) -> Regime:
    return Regime(BOUNDARY, alpha, reason=f"{what} are of the same order")


def classify_theorem1(u1: RateExpr, u2: RateExpr, v1: RateExpr, v2: RateExpr) -> Regime:
    """Case of the five-way classification of general rate laws."""
    u1, u2, v1, v2 = (RateExpr.parse(r) for r in (u1, u2, v1, v2))
    _check_order(u1, u2, "u1 <= u2")
    _check_order(v1, v2, "v1 <= v2")
    exact_alpha = _alpha(v2)
    alpha = float(exact_alpha)
    a1 = min(alpha, 1.0)
    vv = v1 * v2
    low = compare_orders(vv, RateExpr(1.0, -1, -2)).order
    if low is Order.SAME:
        return _boundary(alpha, "v1*v2 and 1/(N log^2 N)")
    if low is Order.MUCH_LESS:
        c = compare_orders(u1, vv.scale(1, 1)).order
        if c is Order.SAME:
            return _boundary(alpha, "u1 and v1*v2*N*log N")
        if c is Order.MUCH_LESS:
            sigma = _sigma_uniform(exact_alpha)
            return Regime(T1_1, alpha, Exp1(), sigma, PointMass(1.0), path="dd")
    else:
        high = compare_orders(vv, RateExpr(1.0, -1, 0)).order
        if high is Order.SAME:
            return _boundary(alpha, "v1*v2 and 1/N")
        if high is Order.MUCH_GREATER:
            return Regime(T1_3, alpha, Rayleigh(), PointMass(1.0), PointMass(1.0), path="dd")
        c = compare_orders(u1, vv.scale(1, 0).sqrt()).order
        if c is Order.SAME:
            return _boundary(alpha, "u1 and sqrt(v1*v2*N)")
        if c is Order.MUCH_LESS:
            return Regime(T1_2, alpha, Rayleigh(), PointMass(1.0), PointMass(1.0), path="dd")
    # stem-driven: the cancer-causing type-1 is on the stem
    by_log = compare_orders(u2, RateExpr(1.0, 0, -1)).order
    by_nv2 = compare_orders(u2, v2.scale(1, 0)).order
    if by_log is Order.MUCH_LESS and by_nv2 is Order.MUCH_LESS:
        return Regime(T1_4, alpha, Exp1(), PointMass(0.0), PointMass(a1), path="sd")
    if Order.MUCH_GREATER in (by_log, by_nv2):
        c = compare_orders(u1, u2)
        if c.order is Order.MUCH_LESS:
            return Regime(T1_5_DISTINCT, alpha, Exp1(), PointMass(0.0), PointMass(0.0), path="ss")
        return Regime(T1_5_PROPORTIONAL, alpha, Hypoexp(c.ratio), PointMass(0.0), PointMass(0.0),
                      A=c.ratio, path="ss")
    return _boundary(alpha, "u2 and its thresholds 1/log N, N*v2")


def classify_null(mu: RateExpr) -> Regime:
    """Case for the null model ``u1 = u2 = v1 = v2 = mu``."""
    mu = RateExpr.parse(mu)
    exact_alpha = _alpha(mu)
    alpha = float(exact_alpha)
    one = PointMass(1.0)
    # thresholds in increasing order: 1/(N log N), 1/(sqrt(N) log N), 1/sqrt(N)
    thresholds = (RateExpr(1.0, -1, -1), RateExpr(1.0, Fraction(-1, 2), -1),
                  RateExpr(1.0, Fraction(-1, 2), 0))
    k = 0
    for th in thresholds:
        c = compare_orders(mu, th)
        if c.order is Order.MUCH_LESS:
            break
        if c.order is Order.SAME:
            return _null_boundary(2 * k + 2, alpha, c.ratio)
        k += 1
    case = f"NULL.{2 * k + 1}"
    if k == 0:
        return Regime(case, alpha, Exp1(), PointMass(0.0), one, path="sd", null_model=True)
    if k == 1:
        sigma = _sigma_uniform(exact_alpha)
        return Regime(case, alpha, Exp1(), sigma, one, path="dd", null_model=True)
    return Regime(case, alpha, Rayleigh(), one, one, path="dd", null_model=True)


def _null_boundary(part: int, alpha: float, A: float) -> Regime:
    one = PointMass(1.0)
    if part == 2:
        return Regime("NULL.2", alpha, Exp1(), BernoulliMix(A), PointMass(min(alpha, 1.0)), A=A, null_model=True)
    if part == 4:
        return Regime("NULL.4", alpha, NullBoundaryTau(A), NullBoundarySigma(A), one, A=A, path="dd",
                      null_model=True)
    return Regime(DEGENERATE, alpha, None, one, one, A=A, null_model=True,
                  reason="mu ~ A/sqrt(N): type-2 arrives in finite time; only bounds are known")


def scaling_factor(regime: Regime, config: CryptConfig) -> float:
    """Factor multiplying tau in the regime's limit statement, evaluated at ``config``."""
    l = config.l
    N = float(config.N)
    case = regime.case
    if regime.null_model:
        mu = config.u1
        if not (config.u2 == mu and config.v1 == mu and config.v2 == mu):
            raise ConfigError("regime-mismatch", "null-model regime needs u1 = u2 = v1 = v2")
        if case == "NULL.4":
            return 1.0 / l
        if case == DEGENERATE:
            raise ConfigError("regime-mismatch", "no scaling for the degenerate finite-time case")
        if mu <= 0:
            raise ConfigError("regime-mismatch", "mu must be positive")
        if case == "NULL.1":
            return mu
        if case == "NULL.2":
            return (1 + regime.A) * mu
        if case == "NULL.3":
            return min(regime.alpha, 1.0) * mu * mu * N * l
        return math.sqrt(N) * mu
    if case == T1_1:
        f = min(regime.alpha, 1.0) * config.v1 * config.v2 * N * l
    elif case in (T1_2, T1_3):
        f = math.sqrt(config.v1 * config.v2 * N)
    elif case in (T1_4, T1_5_DISTINCT, T1_5_PROPORTIONAL):
        f = config.u1
    else:
        raise ConfigError("regime-mismatch", f"no scaling for case {case}")
    if not f > 0:
        raise ConfigError("regime-mismatch", f"rates in config give a zero scaling factor for {case}")
    return f
