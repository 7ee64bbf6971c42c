"""Per-cell reference simulation of the crypt for small ``l``.

Cells live in a heap-ordered array: index 0 is the stem and generation ``k``
occupies indices ``[2**(k-1), 2**k)``. A split maps cell ``c`` to the
parent ``c >> 1``, which makes the stem emit the new generation-1 cell and
drops the generation-``l`` cohort.

Between splits the next mark is drawn at the summed intensity of every
Poisson process and attributed to one of them. Rejected marks are drawn and
discarded, so two models can share one mark sequence.
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
    timed_out,
    validate_config,
)

SOFT_MAX_L = 12
HARD_MAX_L = 20


@dataclass
class CryptState:
    """Per-cell state of one crypt.

    ``counter[c]`` counts accepted type-1 marks (at most 1 in H1);
    ``origin_gen[c, k]`` / ``origin_time[c, k]`` locate the k-th of them, so
    type-2 process ``k`` on cell ``c`` traces back to that type-1. The stem
    keeps its own type-1 in row 0 and passes it on with the inherited flag.
    """

    l: int
    counter: np.ndarray
    inherited: np.ndarray
    origin_gen: np.ndarray
    origin_time: np.ndarray
    extra: int = 0  # sum over daughters of max(counter - 1, 0)

    @classmethod
    def empty(cls, l: int, slots: int = 4) -> "CryptState":
        n = 1 << l
        return cls(l, np.zeros(n, np.int64), np.zeros(n, bool),
                   np.zeros((n, slots), np.int64), np.zeros((n, slots)))

    @property
    def N(self) -> int:
        return 1 << self.l

    def types(self) -> np.ndarray:
        return np.minimum(self.counter, 1)

    def same_as(self, other: "CryptState") -> bool:
        return (np.array_equal(self.counter, other.counter)
                and np.array_equal(self.inherited, other.inherited)
                and np.array_equal(self.origin_gen, other.origin_gen)
                and np.array_equal(self.origin_time, other.origin_time))

    def add_type1(self, cell: int, gen: int, t: float) -> None:
        k = int(self.counter[cell])
        if k == self.origin_gen.shape[1]:
            self.origin_gen = np.concatenate([self.origin_gen, np.zeros_like(self.origin_gen)], axis=1)
            self.origin_time = np.concatenate([self.origin_time, np.zeros_like(self.origin_time)], axis=1)
        self.origin_gen[cell, k] = gen
        self.origin_time[cell, k] = t
        self.counter[cell] = k + 1
        if cell and k >= 1:
            self.extra += 1


def _recount_extra(state: CryptState) -> int:
    return int(np.maximum(state.counter[1:] - 1, 0).sum())


def step_crypt(state: CryptState) -> CryptState:
    """State right after a split; the input is left untouched."""
    parent = np.arange(state.N) >> 1
    new = CryptState(state.l, state.counter[parent], state.inherited[parent],
                     state.origin_gen[parent], state.origin_time[parent])
    new.extra = _recount_extra(new)
    return new


def generation_of(cell: int) -> int:
    return int(cell).bit_length()


def check_oracle_size(config: CryptConfig, allow_large: bool) -> None:
    if config.l > HARD_MAX_L or (config.l > SOFT_MAX_L and not allow_large):
        raise ConfigError("resource-limit",
                          f"l={config.l} is beyond the per-cell oracle's limit "
                          f"({SOFT_MAX_L}, or {HARD_MAX_L} with allow_large)")


@dataclass
class _Model:
    """One model's view of the shared mark sequence."""

    counters: bool  # H2-style counters (else H1 rejection)
    state: CryptState
    stem_t1: Optional[float] = None
    result: Optional[tuple] = None  # (tau, sigma_gen, rho_gen, cancer_t1)

    @property
    def done(self) -> bool:
        return self.result is not None

    # each handler returns True when the mark was accepted

    def stem_type1(self, t) -> bool:
        s = self.state
        if s.counter[0] != 0:
            return False
        s.add_type1(0, 0, t)
        s.inherited[0] = True
        self.stem_t1 = t
        return True

    def stem_type2(self, t) -> bool:
        s = self.state
        if s.counter[0] == 0:
            return False
        self.result = (t, 0, 0, float(s.origin_time[0, 0]))
        return True

    def daughter_type1(self, cell, t) -> bool:
        s = self.state
        if s.inherited[cell] or (s.counter[cell] and not self.counters):
            return False
        s.add_type1(cell, generation_of(cell), t)
        return True

    def daughter_type2(self, cell, k, t) -> bool:
        s = self.state
        if s.counter[cell] <= k:
            return False
        self.result = (t, int(s.origin_gen[cell, k]), generation_of(cell), float(s.origin_time[cell, k]))
        return True

    def outcome(self, config: CryptConfig) -> SimOutcome:
        if self.result is None:
            return timed_out(config, self.stem_t1)
        tau, sg, rg, x1 = self.result
        return finished(config.l, tau, sg, rg, x1, self.stem_t1)


def _run(config: CryptConfig, rates, models: list[_Model], stream: RngStream) -> None:
    u1, u2, v1, v2 = rates
    d = config.N - 1
    shared = [u1, u2, v1 * d, v2 * d]
    shared_total = sum(shared)
    # the H2 model (if any) owns the extra type-2 processes of multiply-marked cells
    owner = next((m for m in models if m.counters), None)
    t = 0.0
    next_split = 1.0
    fixed = False
    while True:
        live = [m for m in models if not m.done]
        if not live:
            return
        extra_rate = v2 * owner.state.extra if owner is not None and not owner.done else 0.0
        total = shared_total + extra_rate
        if total <= 0.0 and fixed:
            return
        e = float(stream.standard_exponential()) / total if total > 0 else math.inf
        if fixed and t + e > next_split:
            # splits leave the state unchanged; jump to the mark
            next_split = math.floor(t + e) + 1.0
        if t + e >= next_split:
            t = next_split
            next_split += 1.0
            if t > config.max_time:
                return
            fixed = True
            for m in live:
                new = step_crypt(m.state)
                fixed &= new.same_as(m.state)
                m.state = new
            continue
        t += e
        if t > config.max_time:
            return
        x = float(stream.uniform()) * total
        if x < shared[0]:
            changed = [m.stem_type1(t) for m in live]
        elif x < shared[0] + shared[1]:
            changed = [m.stem_type2(t) for m in live]
        elif x < shared[0] + shared[1] + shared[2]:
            cell = 1 + int(stream.uniform() * d)
            changed = [m.daughter_type1(cell, t) for m in live]
        elif x < shared_total:
            cell = 1 + int(stream.uniform() * d)
            changed = [m.daughter_type2(cell, 0, t) for m in live]
        else:
            s = owner.state
            w = np.cumsum(np.maximum(s.counter - 1, 0)[1:])
            cell = min(1 + int(np.searchsorted(w, stream.uniform() * w[-1], side="right")), d)
            k = 1 + int(stream.uniform() * (s.counter[cell] - 1))
            changed = [owner.daughter_type2(cell, k, t)]
        # rejected marks leave a fixed point fixed
        fixed = fixed and not any(changed)


def simulate_exact(config: CryptConfig, variant: Variant | str, stream: RngStream,
                   allow_large: bool = False) -> SimOutcome:
    """Per-cell simulation of one replicate of ``variant``.

    H1 rejects type-1 marks on mutated cells; the other variants use
    counters, and the sub-models switch their excluded rates off.
    """
    variant = Variant.parse(variant)
    validate_config(config, variant)
    check_oracle_size(config, allow_large)
    model = _Model(variant is not Variant.H1, CryptState.empty(config.l))
    _run(config, variant.active_rates(config), [model], stream)
    return model.outcome(config)


def simulate_coupled_h1_h2(config: CryptConfig, stream: RngStream,
                           allow_large: bool = False) -> tuple[SimOutcome, SimOutcome]:
    """H1 and H2 driven by the same marks; returns ``(h1, h2)``.

    The extra type-2 processes of cells with counter above 1 exist only in H2
    and are drawn only while such cells are present.
    """
    validate_config(config, Variant.H1)
    check_oracle_size(config, allow_large)
    h1 = _Model(False, CryptState.empty(config.l))
    h2 = _Model(True, CryptState.empty(config.l))
    _run(config, Variant.H1.active_rates(config), [h1, h2], stream)
    return h1.outcome(config), h2.outcome(config)
