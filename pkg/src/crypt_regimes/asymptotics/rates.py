"""Rates of the form ``c * N**p * (log2 N)**q`` and their asymptotic order."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence

from ..core import ConfigError


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float) and not math.isfinite(x):
        raise ConfigError("bad-rate-law", f"exponent {x!r} is not finite")
    # decimal reading: 0.1 stays 1/10 rather than its binary expansion
    return Fraction(str(x))


@dataclass(frozen=True)
class RateExpr:
    c: float
    p: Fraction = Fraction(0)
    q: Fraction = Fraction(0)

    def __post_init__(self):
        c = float(self.c)
        if not (math.isfinite(c) and c > 0):
            raise ConfigError("bad-rate-law", f"coefficient must be positive and finite, got {self.c!r}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "p", _exact(self.p))
        object.__setattr__(self, "q", _exact(self.q))

    @classmethod
    def parse(cls, triple: Sequence) -> "RateExpr":
        """Build from a ``[c, p, q]`` list (as found in config files)."""
        if isinstance(triple, RateExpr):
            return triple
        if isinstance(triple, (str, bytes)) or len(triple) != 3:
            raise ConfigError("bad-rate-law", f"expected [c, p, q], got {triple!r}")
        for x in triple:
            if isinstance(x, bool) or not isinstance(x, (Real, Fraction)):
                raise ConfigError("bad-rate-law", f"expected numbers in [c, p, q], got {triple!r}")
        return cls(*triple)

    def as_list(self) -> list[float]:
        return [self.c, float(self.p), float(self.q)]

    def __mul__(self, other: "RateExpr") -> "RateExpr":
        return RateExpr(self.c * other.c, self.p + other.p, self.q + other.q)

    def scale(self, a=0, b=0, k: float = 1.0) -> "RateExpr":
        """Multiply by ``k * N**a * (log2 N)**b``."""
        return RateExpr(self.c * k, self.p + _exact(a), self.q + _exact(b))

    def sqrt(self) -> "RateExpr":
        return RateExpr(math.sqrt(self.c), self.p / 2, self.q / 2)

    def log2_at(self, l: int) -> float:
        """log2 of the rate at ``N = 2**l``; finite even when the rate underflows."""
        return math.log2(self.c) + float(self.p) * l + float(self.q) * math.log2(l)

    def at(self, l: int) -> float:
        return 2.0 ** self.log2_at(l)

    def __str__(self):
        return f"{self.c:g}*N^{self.p}*log2(N)^{self.q}"


class Order(str, enum.Enum):
    MUCH_LESS = "much-less"
    SAME = "same-order"
    MUCH_GREATER = "much-greater"


@dataclass(frozen=True)
class Comparison:
    order: Order
    ratio: float | None = None  # c_a / c_b when same-order


def compare_orders(a: RateExpr, b: RateExpr) -> Comparison:
    ka, kb = (a.p, a.q), (b.p, b.q)
    if ka < kb:
        return Comparison(Order.MUCH_LESS)
    if ka > kb:
        return Comparison(Order.MUCH_GREATER)
    return Comparison(Order.SAME, a.c / b.c)
