"""Event-driven simulation of the counter model and its sub-models.

No cell is materialised. Daughter type-1 marks form one Poisson stream of
rate ``v1 * (N - 1)`` over the whole crypt; each mark starts a clone whose
first type-2 time comes from inverting the clone's piecewise-linear
cumulative hazard. The stem lineage is handled the same way through the
exposure of its inherited front.

Randomness is split into independent substreams (arrival gaps, arrival
generations, clone draws, stem draws, coupling draws) so that the k-th
arrival always sees the k-th draw of each, whatever the chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    CryptConfig,
    RngStream,
    SimOutcome,
    Variant,
    finished,
    time_to_next_split,
    timed_out,
    validate_config,
)

_ARRIVAL_GAPS, _ARRIVAL_GENS, _CLONE_DRAWS, _STEM_DRAWS, _COUPLING_DRAWS = range(5)
_FIRST_CHUNK = 64
_MAX_CHUNK = 1 << 16


# --- exposure functions ---------------------------------------------------


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")


def clone_total_exposure(l: int, i: int, delta: float) -> float:
    return delta + ((1 << (l - i + 1)) - 2)


def clone_exposure(l: int, i: int, delta: float, s: float) -> float:
    """Cell-time accumulated by a generation-``i`` clone during its first ``s`` time units.

    The clone is one cell until its first split at ``delta``, then doubles at
    every split until its generation-``l`` cohort is swept.
    """
    if not 1 <= i <= l:
        raise ValueError(f"generation {i} outside 1..{l}")
    _check_delta(delta)
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s <= delta:
        return float(s)
    u = s - delta
    n = l - i
    if math.isinf(u) or u >= n:
        return clone_total_exposure(l, i, delta)
    j = int(math.floor(u)) + 1
    size = float(1 << j)
    return delta + (size - 2.0) + (u - (j - 1)) * size


def invert_clone_exposure(l: int, i: int, delta: float, x: float) -> tuple[float, int]:
    """Inverse of :func:`clone_exposure`: time ``s`` and splits elapsed at exposure ``x``.

    ``x`` must not exceed the clone's total exposure.
    """
    if x < delta:
        return float(x), 0
    y = x - delta + 2.0
    j = min(math.frexp(y)[1] - 1, l - i)
    size = float(1 << j)
    return delta + (j - 1) + (y - size) / size, j


def _invert_clone_vec(l, gens, deltas, x):
    """Vectorised :func:`invert_clone_exposure` (all ``x`` within total exposure)."""
    y = x - deltas + 2.0
    j = np.frexp(y)[1] - 1
    j = np.minimum(j, l - gens)
    early = x < deltas
    j = np.where(early, 0, j)
    size = np.ldexp(1.0, j)
    s = np.where(early, x, deltas + (j - 1) + (y - size) / size)
    return s, j


def stem_lineage_exposure(l: int, delta: float, s: float) -> float:
    """Cell-time of type-1 daughters descended from a stem mutation ``s`` time units ago.

    ``m`` splits after the mutation the first ``m`` generations, ``2**m - 1``
    cells, carry it; the count stops growing at ``N - 1``.
    """
    if l < 1:
        raise ValueError("l must be positive")
    _check_delta(delta)
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s <= delta:
        return 0.0
    u = s - delta
    if u >= l - 1:
        full = float((1 << l) - 1)
        return float((1 << l) - l - 1) + (u - (l - 1)) * full
    m = int(math.floor(u)) + 1
    return float((1 << m) - m - 1) + (u - (m - 1)) * float((1 << m) - 1)


def invert_stem_lineage_exposure(l: int, delta: float, x: float) -> tuple[float, int]:
    """Time ``s`` at which the stem lineage exposure reaches ``x > 0``, and splits by then."""
    cap_start = float((1 << l) - l - 1)
    if x >= cap_start:
        s = delta + (l - 1) + (x - cap_start) / float((1 << l) - 1)
    else:
        m = 1
        while float((1 << (m + 1)) - m - 2) <= x:
            m += 1
        s = delta + (m - 1) + (x - float((1 << m) - m - 1)) / float((1 << m) - 1)
    return s, int(math.floor(s - delta)) + 1


# --- elementary samplers ---------------------------------------------------


def _generation_from_uniform(l: int, u):
    """Generation with P(i) = 2**(i-1) / (2**l - 1) by inverting the cumulative law."""
    y = 1.0 + u * float((1 << l) - 1)
    return np.minimum(np.frexp(y)[1], l)


def sample_type1_generation(l: int, stream: RngStream) -> int:
    if l < 1:
        raise ValueError("l must be positive")
    return int(_generation_from_uniform(l, stream.uniform()))


def sample_clone_type2(l: int, i: int, delta: float, v2: float,
                       stream: RngStream) -> Optional[tuple[float, int]]:
    """Waiting time and generation of a clone's first type-2 mark, or None if it never gets one."""
    if not 1 <= i <= l:
        raise ValueError(f"generation {i} outside 1..{l}")
    _check_delta(delta)
    if v2 < 0:
        raise ValueError("v2 must be nonnegative")
    e = float(stream.standard_exponential())
    if v2 == 0 or e > v2 * clone_total_exposure(l, i, delta):
        return None
    s, j = invert_clone_exposure(l, i, delta, e / v2)
    return s, i + j


@dataclass(frozen=True)
class StemCandidate:
    time: float
    kind: str  # "ss" or "sd"
    generation: int


def _sd_candidate(l: int, T: float, delta: float, v2: float, e: float, u: float) -> Optional[StemCandidate]:
    if v2 <= 0 or math.isinf(T):
        return None
    s, m = invert_stem_lineage_exposure(l, delta, e / v2)
    j = int(_generation_from_uniform(min(m, l), u))
    return StemCandidate(T + s, "sd", j)


def sample_stem_events(config: CryptConfig, T: float, delta: float, stream: RngStream,
                       variant: Variant | str = Variant.H2) -> list[StemCandidate]:
    """ss and sd candidates following a stem type-1 mutation at time ``T``."""
    _check_delta(delta)
    _, u2, _, v2 = Variant.parse(variant).active_rates(config)
    e_ss, e_sd, u_sd = (float(x) for x in (stream.standard_exponential(),
                                           stream.standard_exponential(), stream.uniform()))
    out = []
    if u2 > 0:
        out.append(StemCandidate(T + e_ss / u2, "ss", 0))
    sd = _sd_candidate(config.l, T, delta, v2, e_sd, u_sd)
    if sd is not None:
        out.append(sd)
    return out


# --- the engine -----------------------------------------------------------


@dataclass
class _Best:
    time: float = math.inf
    sigma: int = -1
    rho: int = -1
    cancer_t1: float = math.nan

    def offer(self, time, sigma, rho, cancer_t1):
        if time < self.time:
            self.time, self.sigma, self.rho, self.cancer_t1 = time, sigma, rho, cancer_t1

    def outcome(self, config: CryptConfig, stem_t1: Optional[float]) -> SimOutcome:
        # the stem's type-1 is only observed if it precedes the end of the run
        if self.time > config.max_time:
            return timed_out(config, stem_t1 if stem_t1 is not None and stem_t1 <= config.max_time else None)
        seen = stem_t1 if stem_t1 is not None and stem_t1 <= self.time else None
        return finished(config.l, self.time, self.sigma, self.rho, self.cancer_t1, seen)


@dataclass(frozen=True)
class _Stem:
    T: float
    delta: float
    ss: Optional[StemCandidate]
    sd: Optional[StemCandidate]

    @property
    def stem_t1(self) -> Optional[float]:
        return None if math.isinf(self.T) else self.T


def _draw_stem(l: int, u1: float, u2: float, v2: float, stream: RngStream) -> _Stem:
    e_t, e_ss, e_sd, u_sd = (float(x) for x in stream.uniform(4))
    e_t, e_ss, e_sd = (-math.log1p(-x) for x in (e_t, e_ss, e_sd))
    if u1 <= 0:
        return _Stem(math.inf, 1.0, None, None)
    T = e_t / u1
    delta = time_to_next_split(T)
    ss = StemCandidate(T + e_ss / u2, "ss", 0) if u2 > 0 else None
    sd = _sd_candidate(l, T, delta, v2, e_sd, u_sd)
    return _Stem(T, delta, ss, sd)


def _arrival_chunks(l: int, v1: float, stream: RngStream):
    """Yield (times, generations, clone Exp(1) draws) for successive arrival chunks."""
    rate = v1 * float((1 << l) - 1)
    gaps_s, gens_s, clone_s = (stream.substream(k) for k in (_ARRIVAL_GAPS, _ARRIVAL_GENS, _CLONE_DRAWS))
    t_last = 0.0
    n = _FIRST_CHUNK
    while True:
        gaps = gaps_s.standard_exponential(n) / rate
        times = np.cumsum(np.concatenate(([t_last], gaps)))[1:]
        gens = _generation_from_uniform(l, gens_s.uniform(n))
        yield times, gens, clone_s.standard_exponential(n)
        t_last = float(times[-1])
        n = min(2 * n, _MAX_CHUNK)


def _clone_candidates(l, v2, times, gens, e):
    """Absolute type-2 times (inf if unsuccessful) and type-2 generations for clones."""
    deltas = np.floor(times) + 1.0 - times
    total = deltas + (np.ldexp(1.0, l - gens + 1) - 2.0)
    x = e / v2 if v2 > 0 else np.full_like(e, np.inf)
    ok = x <= total
    cand = np.full(times.shape, np.inf)
    rho = np.zeros(times.shape, dtype=np.int64)
    if ok.any():
        s, j = _invert_clone_vec(l, gens[ok], deltas[ok], x[ok])
        cand[ok] = times[ok] + s
        rho[ok] = gens[ok] + j
    return cand, rho


def _suppressed(times, gens, stem: _Stem, l: int):
    """Arrivals that land on daughters already carrying the stem's mutation."""
    if math.isinf(stem.T):
        return np.zeros(times.shape, dtype=bool)
    front = np.minimum(np.floor(times) - math.floor(stem.T), l)
    return (times > stem.T) & (gens <= front)


def _offer_min(best: _Best, cand, rho, gens, times, mask=None):
    if mask is not None:
        cand = np.where(mask, cand, np.inf)
    k = int(np.argmin(cand))
    if cand[k] < best.time:
        best.offer(float(cand[k]), int(gens[k]), int(rho[k]), float(times[k]))


def _stem_best(stem: _Stem, use_ss: bool, use_sd: bool) -> _Best:
    best = _Best()
    if use_ss and stem.ss is not None:
        best.offer(stem.ss.time, 0, 0, stem.T)
    if use_sd and stem.sd is not None:
        best.offer(stem.sd.time, 0, stem.sd.generation, stem.T)
    return best


def simulate_fast(config: CryptConfig, variant: Variant | str, stream: RngStream,
                  stop_early: bool = True) -> SimOutcome:
    """Exact simulation of H2, M1, M2 or M3 for one replicate.

    With ``stop_early`` the arrival stream is abandoned once the next arrival
    is later than the best type-2 candidate; every candidate trails its own
    arrival, so this never changes the winner.
    """
    variant = Variant.parse(variant)
    if variant is Variant.H1:
        raise ConfigError("unsupported-variant", "the fast engine covers h2, m1, m2, m3; h1 needs the exact oracle")
    validate_config(config, variant)
    if not stop_early and math.isinf(config.max_time):
        raise ValueError("stop_early=False needs a finite max_time")
    u1, u2, v1, v2 = variant.active_rates(config)
    l = config.l
    stem = _draw_stem(l, u1, u2, v2, stream.substream(_STEM_DRAWS))
    best = _stem_best(stem, True, True)
    if v1 > 0:
        for times, gens, e in _arrival_chunks(l, v1, stream):
            limit = config.max_time if not stop_early else min(best.time, config.max_time)
            if times[0] > limit:
                break
            cand, rho = _clone_candidates(l, v2, times, gens, e)
            live = times <= limit
            if variant is Variant.H2:
                live &= ~_suppressed(times, gens, stem, l)
            _offer_min(best, cand, rho, gens, times, live)
            if times[-1] > limit:
                break
    return best.outcome(config, stem.stem_t1)


@dataclass(frozen=True)
class CoupledOutcome:
    h2: SimOutcome
    m1: SimOutcome
    m2: SimOutcome
    m3: SimOutcome


def _suppressed_clone(l, v2, b, i, e_own, stem: _Stem, u_land, e_resid):
    """M1 type-2 time of a clone born inside the stem-inherited region.

    The clone's cells belong to the region, so its marks are the region's
    marks: none before the region's first mark ``S``; at ``S`` the mark falls
    on the clone with probability (clone cells in that generation) / (cells in
    that generation); after ``S`` marks are fresh.
    """
    delta = time_to_next_split(b)
    total = clone_total_exposure(l, i, delta)
    sd = stem.sd
    if sd is None or sd.time < b:
        x = e_own / v2 if v2 > 0 else math.inf
        if x > total:
            return math.inf, 0
        s, j = invert_clone_exposure(l, i, delta, x)
        return b + s, i + j
    k = math.floor(sd.time) - math.floor(b)
    if i + k <= l and sd.generation == i + k and u_land * (1 << (sd.generation - 1)) < (1 << k):
        return sd.time, sd.generation
    x = clone_exposure(l, i, delta, sd.time - b) + e_resid / v2
    if x > total:
        return math.inf, 0
    s, j = invert_clone_exposure(l, i, delta, x)
    return b + s, i + j


def simulate_coupled(config: CryptConfig, stream: RngStream) -> CoupledOutcome:
    """H2 together with M1, M2, M3 built from the same marks.

    ``h2.tau == min(m1.tau, m2.tau, m3.tau)`` holds exactly for every
    replicate in which H2 finishes. The sub-models keep running past the H2
    winner until their own type-2 or ``max_time``.
    """
    validate_config(config, Variant.H2)
    u1, u2, v1, v2 = config.u1, config.u2, config.v1, config.v2
    l = config.l
    stem = _draw_stem(l, u1, u2, v2, stream.substream(_STEM_DRAWS))
    extra = stream.substream(_COUPLING_DRAWS)
    h2 = _stem_best(stem, True, True)
    m1 = _Best()
    if v1 > 0:
        for times, gens, e in _arrival_chunks(l, v1, stream):
            limit = min(m1.time, config.max_time)
            if times[0] > limit:
                break
            live = times <= limit
            cand, rho = _clone_candidates(l, v2, times, gens, e)
            sup = _suppressed(times, gens, stem, l) & live
            _offer_min(h2, cand, rho, gens, times, live & ~sup)
            for k in np.flatnonzero(sup):
                u_land, e_resid = extra.uniform(2)
                cand[k], rho[k] = _suppressed_clone(l, v2, float(times[k]), int(gens[k]), float(e[k]),
                                                    stem, float(u_land), -math.log1p(-float(e_resid)))
            _offer_min(m1, cand, rho, gens, times, live)
            if times[-1] > limit:
                break
    m2 = _stem_best(stem, False, True)
    m3 = _stem_best(stem, True, False)
    t1 = stem.stem_t1
    return CoupledOutcome(h2.outcome(config, t1), m1.outcome(config, None),
                          m2.outcome(config, t1), m3.outcome(config, t1))
