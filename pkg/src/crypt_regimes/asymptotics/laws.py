"""Limit distributions with cdf, pdf and inversion samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from ..core import RngStream

_EQUAL_RATE_TOL = 1e-9


class LimitLaw:
    tag: str = ""
    continuous: bool = True

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError(f"{self.tag} has no density")

    def _from_uniform(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def uniforms_needed(self) -> int:
        return 1

    def sample(self, stream: RngStream, size: int) -> np.ndarray:
        k = self.uniforms_needed()
        u = np.asarray(stream.uniform(size * k), dtype=float).reshape(k, size) if k > 1 else stream.uniform(size)
        return self._from_uniform(u)

    @property
    def center(self) -> Optional[float]:
        """Location of a point mass, None for spread-out laws."""
        return None

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"law": self.tag, **self.params()}

    def __repr__(self):
        ps = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.tag}({ps})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((self.tag, tuple(self.params().items())))


def _exp_quantile(u):
    return -np.log1p(-u)


class Exp1(LimitLaw):
    tag = "Exp1"

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-np.maximum(t, 0)), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.maximum(x, 0)), 0.0)

    def _from_uniform(self, u):
        return _exp_quantile(u)


class Rayleigh(LimitLaw):
    tag = "Rayleigh"

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-np.maximum(t, 0) ** 2 / 2), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, x * np.exp(-x * x / 2), 0.0)

    def _from_uniform(self, u):
        return np.sqrt(2 * _exp_quantile(u))


class Hypoexp(LimitLaw):
    """Exp(1) + Exp(rate 1/A)."""

    tag = "Hypoexp"

    def __init__(self, A: float):
        if not A > 0:
            raise ValueError("A must be positive")
        self.A = float(A)

    def params(self):
        return {"A": self.A}

    @property
    def _equal(self):
        return abs(1 - 1 / self.A) < _EQUAL_RATE_TOL

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self._equal:
            out = 1 - np.exp(-t) * (1 + t)
        else:
            b = 1 / self.A
            out = 1 - (b * np.exp(-t) - np.exp(-b * t)) / (b - 1)
        return np.clip(out, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        if self._equal:
            out = xp * np.exp(-xp)
        else:
            b = 1 / self.A
            out = b * (np.exp(-xp) - np.exp(-b * xp)) / (b - 1)
        return np.where(x >= 0, out, 0.0)

    def uniforms_needed(self):
        return 2

    def _from_uniform(self, u):
        return _exp_quantile(u[0]) + self.A * _exp_quantile(u[1])


class NullBoundaryTau(LimitLaw):
    """Law of tau / log2 N on the boundary mu ~ A / (sqrt(N) log2 N)."""

    tag = "NullBoundaryTau"

    def __init__(self, A: float):
        if not A > 0:
            raise ValueError("A must be positive")
        self.A = float(A)

    def params(self):
        return {"A": self.A}

    def _hazard(self, t):
        a2 = self.A ** 2
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return np.where(t <= 0.5, a2 * t * t / 2, a2 * t / 2 - a2 / 8)

    def cdf(self, t):
        return -np.expm1(-self._hazard(t))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a2 = self.A ** 2
        rate = np.where(x <= 0.5, a2 * x, a2 / 2)
        return np.where(x >= 0, rate * np.exp(-self._hazard(x)), 0.0)

    def _from_uniform(self, u):
        e = _exp_quantile(u)
        a2 = self.A ** 2
        return np.where(e <= a2 / 8, np.sqrt(2 * e) / self.A, 2 * e / a2 + 0.25)


class NullBoundarySigma(LimitLaw):
    """Law of sigma on the same boundary, supported on [1/2, 1].

    A sample is built from ``h`` drawn from :class:`NullBoundaryTau`: uniform
    on ``[1 - h, 1]`` when ``h <= 1/2``, otherwise uniform on ``[1/2, 1]``.
    """

    tag = "NullBoundarySigma"

    def __init__(self, A: float):
        if not A > 0:
            raise ValueError("A must be positive")
        self.A = float(A)

    def params(self):
        return {"A": self.A}

    def pdf(self, x):
        A = self.A
        tail = 2 * math.exp(-A * A / 8)

        def one(xi):
            if not 0.5 <= xi <= 1:
                return 0.0
            inner, _ = integrate.quad(lambda t: A * A * math.exp(-A * A * t * t / 2), 1 - xi, 0.5,
                                      epsabs=1e-10, epsrel=0.0)
            return inner + tail

        x = np.asarray(x, dtype=float)
        return np.vectorize(one, otypes=[float])(x) if x.ndim else np.float64(one(float(x)))

    def cdf(self, t):
        A = self.A
        x = np.clip(np.asarray(t, dtype=float), 0.5, 1.0)
        w = 1 - x
        c = A * math.sqrt(math.pi / 2)
        erf_half = special.erf(A / (2 * math.sqrt(2)))
        # integral over [1/2, x] of the density, exchanged with the inner integral
        out = ((x - 1) * c * (erf_half - special.erf(A * w / math.sqrt(2)))
               + np.exp(-A * A * w * w / 2) - math.exp(-A * A / 8)
               + 2 * math.exp(-A * A / 8) * (x - 0.5))
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.5, 0.0, np.where(t >= 1, 1.0, np.clip(out, 0.0, 1.0)))

    def uniforms_needed(self):
        return 2

    def _from_uniform(self, u):
        h = NullBoundaryTau(self.A)._from_uniform(u[0])
        lo = np.where(h <= 0.5, 1 - h, 0.5)
        return lo + (1 - lo) * u[1]


class UniformInterval(LimitLaw):
    """Uniform on ``(a, b]``."""

    tag = "UniformInterval"

    def __init__(self, a: float, b: float):
        if not a < b:
            raise ValueError("need a < b")
        self.a, self.b = float(a), float(b)

    def params(self):
        return {"a": self.a, "b": self.b}

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x > self.a) & (x <= self.b), 1 / (self.b - self.a), 0.0)

    def _from_uniform(self, u):
        # 1 - u lies in (0, 1], matching the half-open interval
        return self.a + (self.b - self.a) * (1 - u)


class PointMass(LimitLaw):
    tag = "PointMass"
    continuous = False

    def __init__(self, x: float):
        self.x = float(x)

    def params(self):
        return {"x": self.x}

    @property
    def center(self):
        return self.x

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.x, 1.0, 0.0)

    def _from_uniform(self, u):
        return np.full(np.shape(u), self.x)


class BernoulliMix(LimitLaw):
    """``U * xi`` with ``P(xi = 1) = A / (1 + A)`` and ``U`` uniform on (0, 1]."""

    tag = "BernoulliMix"
    continuous = False

    def __init__(self, A: float):
        if not A > 0:
            raise ValueError("A must be positive")
        self.A = float(A)

    def params(self):
        return {"A": self.A}

    @property
    def p_zero(self) -> float:
        return 1 / (1 + self.A)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, self.p_zero + (1 - self.p_zero) * np.clip(t, 0.0, 1.0))

    def uniforms_needed(self):
        return 2

    def _from_uniform(self, u):
        return np.where(u[0] < self.p_zero, 0.0, 1 - u[1])


def limit_cdf(law: LimitLaw, t):
    return law.cdf(t)


def limit_pdf(law: LimitLaw, x):
    return law.pdf(x)


def sample_limit(law: LimitLaw, stream: RngStream, size: int = 1) -> np.ndarray:
    return law.sample(stream, size)
