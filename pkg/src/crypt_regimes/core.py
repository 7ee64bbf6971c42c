"""Domain types, configuration checks and random streams for the crypt model.

The crypt holds one stem cell and ``l`` daughter generations; generation
``k`` has ``2**(k-1)`` cells, so the population is ``N = 2**l``. Time is
measured in split periods: the crypt starts full at ``t = 0`` and every cell
splits at each positive integer time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

DEFAULT_MAX_TIME = 1e6


class ConfigError(ValueError):
    """Invalid model parameters. ``kind`` names the violated constraint."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class Variant(str, enum.Enum):
    H1 = "h1"
    H2 = "h2"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError("unknown-variant", f"{value!r} is not one of h1, h2, m1, m2, m3") from None

    def active_rates(self, config: "CryptConfig") -> tuple[float, float, float, float]:
        """(u1, u2, v1, v2) with the rates this variant switches off set to 0."""
        u1, u2, v1, v2 = config.u1, config.u2, config.v1, config.v2
        if self is Variant.M1:
            return 0.0, 0.0, v1, v2
        if self is Variant.M2:
            return u1, 0.0, 0.0, v2
        if self is Variant.M3:
            return u1, u2, 0.0, 0.0
        return u1, u2, v1, v2


@dataclass(frozen=True)
class CryptConfig:
    l: int
    u1: float
    u2: float
    v1: float
    v2: float
    max_time: float = DEFAULT_MAX_TIME
    enforce_ordering: bool = True

    @property
    def N(self) -> int:
        return 1 << self.l

    def with_rates(self, **kw) -> "CryptConfig":
        return replace(self, **kw)


def validate_config(config: CryptConfig, variant: Variant | str = Variant.H1) -> CryptConfig:
    """Check ``config`` for ``variant`` and return it unchanged.

    Rates the variant switches off are exempt from the ``u1 <= u2`` and
    ``v1 <= v2`` ordering check, as are rates that are exactly zero.
    """
    variant = Variant.parse(variant)
    if not isinstance(config.l, (int, np.integer)) or isinstance(config.l, bool) or config.l < 1:
        raise ConfigError("nonpositive-l", f"l must be a positive integer, got {config.l!r}")
    for name in ("u1", "u2", "v1", "v2"):
        r = getattr(config, name)
        if not math.isfinite(r):
            raise ConfigError("nonfinite-rate", f"{name}={r!r}")
        if r < 0:
            raise ConfigError("negative-rate", f"{name}={r!r}")
    mt = config.max_time
    if mt is None or math.isnan(mt) or mt <= 0:
        raise ConfigError("bad-max-time", f"max_time must be positive or inf, got {mt!r}")
    if config.enforce_ordering:
        u1, u2, v1, v2 = variant.active_rates(config)
        if u1 > 0 and u2 > 0 and u1 > u2:
            raise ConfigError("ordering-violation", f"u1={u1!r} > u2={u2!r}")
        if v1 > 0 and v2 > 0 and v1 > v2:
            raise ConfigError("ordering-violation", f"v1={v1!r} > v2={v2!r}")
    return config


def generation_size(l: int, k: int) -> int:
    if not 1 <= k <= l:
        raise ValueError(f"generation {k} outside 1..{l}")
    return 1 << (k - 1)


def total_descendants(l: int, i: int) -> int:
    """Strict descendants a generation-``i`` cell produces before apoptosis."""
    if not 1 <= i <= l:
        raise ValueError(f"generation {i} outside 1..{l}")
    return (1 << (l - i + 1)) - 2


def splits_between(a: float, b: float) -> int:
    """Number of split instants (positive integers) in ``(a, b]``."""
    return math.floor(b) - math.floor(a)


def time_to_next_split(t: float) -> float:
    """Time from ``t`` to the first split strictly after ``t`` (1 when ``t`` is an integer)."""
    return math.floor(t) + 1.0 - t


# --- outcomes -------------------------------------------------------------

TYPE2 = "type2-occurred"
TIMED_OUT = "timed-out"


@dataclass(frozen=True)
class SimOutcome:
    """One replicate. Locations are stored as generation integers (0 = stem)."""

    status: str
    tau: float
    l: int
    sigma_gen: Optional[int] = None
    rho_gen: Optional[int] = None
    path: Optional[str] = None
    stem_type1_time: Optional[float] = None
    cancer_type1_time: Optional[float] = None

    @property
    def occurred(self) -> bool:
        return self.status == TYPE2

    @property
    def sigma(self) -> Optional[Fraction]:
        return None if self.sigma_gen is None else Fraction(self.sigma_gen, self.l)

    @property
    def rho(self) -> Optional[Fraction]:
        return None if self.rho_gen is None else Fraction(self.rho_gen, self.l)

    def check(self) -> None:
        """Raise AssertionError if the outcome breaks a structural invariant."""
        if not self.occurred:
            assert self.sigma_gen is None and self.rho_gen is None and self.path is None
            return
        s, r = self.sigma_gen, self.rho_gen
        assert 0 <= s <= self.l and 0 <= r <= self.l, (s, r)
        if self.path == "ss":
            assert s == 0 and r == 0
        elif self.path == "sd":
            assert s == 0 and r >= 1
        elif self.path == "dd":
            assert 1 <= s <= r
        else:
            raise AssertionError(f"bad path {self.path!r}")
        assert self.cancer_type1_time is not None and self.cancer_type1_time <= self.tau
        if self.path != "dd":
            assert self.stem_type1_time == self.cancer_type1_time


def timed_out(config: CryptConfig, stem_type1_time: Optional[float] = None) -> SimOutcome:
    return SimOutcome(TIMED_OUT, float(config.max_time), config.l, stem_type1_time=stem_type1_time)


def finished(l: int, tau: float, sigma_gen: int, rho_gen: int, cancer_t1: float,
             stem_t1: Optional[float]) -> SimOutcome:
    if sigma_gen == 0:
        path = "ss" if rho_gen == 0 else "sd"
    else:
        path = "dd"
    return SimOutcome(TYPE2, tau, l, sigma_gen, rho_gen, path, stem_t1, cancer_t1)


# --- random streams -------------------------------------------------------


@dataclass
class RngStream:
    """Counter-based (Philox, 128-bit key) stream derived from a seed sequence.

    ``substream(k)`` yields an independent child stream; children are keyed by
    index so the same child is obtained no matter when it is requested.
    """

    seed_seq: np.random.SeedSequence
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.Philox(self.seed_seq))

    @classmethod
    def from_seed(cls, seed: int, *path: int) -> "RngStream":
        return cls(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path)))

    def substream(self, k: int) -> "RngStream":
        ss = self.seed_seq
        return RngStream(np.random.SeedSequence(entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(k),)))

    def uniform(self, size=None):
        return self._gen.random(size)

    def standard_exponential(self, size=None):
        # inversion keeps each variate tied to exactly one 64-bit draw
        return -np.log1p(-self._gen.random(size))

    def exponential(self, rate: float, size=None):
        return self.standard_exponential(size) / rate


def derive_replicate_stream(master_seed: int, replicate_index: int) -> RngStream:
    if replicate_index < 0:
        raise ValueError("replicate index must be nonnegative")
    return RngStream.from_seed(master_seed, replicate_index)
