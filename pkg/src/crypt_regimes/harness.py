"""Replicate ensembles, KS statistics and regime verification reports."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import kolmogorov

from .asymptotics.classify import Regime, classify_null, classify_theorem1, scaling_factor
from .asymptotics.laws import BernoulliMix, LimitLaw, PointMass, UniformInterval
from .asymptotics.rates import RateExpr
from .core import ConfigError, CryptConfig, SimOutcome, Variant, derive_replicate_stream, validate_config
from .engine import simulate_coupled, simulate_fast
from .oracle import check_oracle_size, simulate_exact

ENGINES = ("exact", "fast", "coupled")
REJECT_LEVEL = 0.01


# --- running replicates ---------------------------------------------------


def simulate_one(config: CryptConfig, variant: Variant, engine: str, master_seed: int, index: int,
                 allow_large: bool = False) -> SimOutcome:
    stream = derive_replicate_stream(master_seed, index)
    if engine == "exact":
        return simulate_exact(config, variant, stream, allow_large=allow_large)
    if engine == "fast":
        return simulate_fast(config, variant, stream)
    if engine == "coupled":
        if variant is Variant.H1:
            raise ConfigError("unsupported-variant", "the coupled engine covers h2, m1, m2, m3")
        return getattr(simulate_coupled(config, stream), variant.value)
    raise ConfigError("unknown-engine", f"{engine!r} is not one of {', '.join(ENGINES)}")


def _preflight(config: CryptConfig, variant: Variant, engine: str, allow_large: bool) -> None:
    """Raise the error a replicate would raise, before any work is spawned."""
    validate_config(config, variant)
    if engine == "exact":
        check_oracle_size(config, allow_large)
    elif variant is Variant.H1:
        raise ConfigError("unsupported-variant", f"the {engine} engine covers h2, m1, m2, m3")


def _run_block(args) -> list[SimOutcome]:
    config, variant, engine, seed, lo, hi, allow_large = args
    return [simulate_one(config, variant, engine, seed, r, allow_large) for r in range(lo, hi)]


@dataclass
class EnsembleResult:
    config: CryptConfig
    variant: Variant
    engine: str
    replicates: int
    master_seed: int
    outcomes: list[SimOutcome]
    scale: Optional[float] = None
    tau: np.ndarray = field(init=False)
    tau_scaled: np.ndarray = field(init=False)
    sigma: np.ndarray = field(init=False)
    rho: np.ndarray = field(init=False)
    path_counts: dict = field(init=False)
    timeouts: int = field(init=False)

    def __post_init__(self):
        done = [o for o in self.outcomes if o.occurred]
        l = self.config.l
        self.tau = np.array([o.tau for o in done], dtype=float)
        self.tau_scaled = self.tau * self.scale if self.scale is not None else np.full(len(done), np.nan)
        self.sigma = np.array([o.sigma_gen / l for o in done], dtype=float)
        self.rho = np.array([o.rho_gen / l for o in done], dtype=float)
        self.path_counts = {p: sum(o.path == p for o in done) for p in ("ss", "sd", "dd")}
        self.timeouts = len(self.outcomes) - len(done)

    @property
    def timeout_fraction(self) -> float:
        return self.timeouts / self.replicates

    @property
    def all_timed_out(self) -> bool:
        return self.timeouts == self.replicates

    def path_fractions(self) -> dict:
        n = max(self.replicates - self.timeouts, 1)
        return {p: c / n for p, c in self.path_counts.items()}


def run_ensemble(config: CryptConfig, variant: Variant | str, engine: str, replicates: int,
                 master_seed: int, scale: Optional[float] = None, threads: int = 1,
                 allow_large: bool = False) -> EnsembleResult:
    """Run ``replicates`` independent replicates; replicate ``r`` uses stream ``(master_seed, r)``.

    ``threads > 1`` spreads contiguous index blocks over worker processes;
    outcomes are stored by index so the result does not depend on it.
    """
    variant = Variant.parse(variant)
    if engine not in ENGINES:
        raise ConfigError("unknown-engine", f"{engine!r} is not one of {', '.join(ENGINES)}")
    if not isinstance(replicates, int) or replicates < 1:
        raise ConfigError("bad-replicates", f"replicates must be a positive integer, got {replicates!r}")
    _preflight(config, variant, engine, allow_large)
    if threads <= 1 or replicates < 2:
        outcomes = _run_block((config, variant, engine, master_seed, 0, replicates, allow_large))
    else:
        edges = np.linspace(0, replicates, min(threads * 4, replicates) + 1).astype(int)
        jobs = [(config, variant, engine, master_seed, int(a), int(b), allow_large)
                for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = [o for block in pool.map(_run_block, jobs) for o in block]
    return EnsembleResult(config, variant, engine, replicates, master_seed, outcomes, scale)


# --- KS statistics ----------------------------------------------------------


def _nonempty(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty-sample")
    return x


def empirical_cdf(sample, grid) -> np.ndarray:
    x = np.sort(_nonempty(sample))
    return np.searchsorted(x, np.asarray(grid, dtype=float), side="right") / x.size


@dataclass(frozen=True)
class KsReport:
    statistic: float
    sizes: tuple
    p_value: float
    reject: bool
    reference: str

    def to_dict(self) -> dict:
        return {"D": self.statistic, "p": self.p_value, "n": list(self.sizes),
                "reject_1pct": self.reject, "reference": self.reference}


def _report(d: float, n_eff: float, sizes: tuple, reference: str) -> KsReport:
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return KsReport(float(d), sizes, p, p < REJECT_LEVEL, reference)


def ks_one_sample(sample, cdf: Callable | LimitLaw, reference: str = "") -> KsReport:
    """Largest gap between the sample ECDF and ``cdf``, checked on both sides of each jump."""
    x = np.sort(_nonempty(sample))
    if isinstance(cdf, LimitLaw):
        reference = reference or repr(cdf)
        cdf = cdf.cdf
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    # left limits, so atoms of the reference law are not counted as gaps
    f_left = np.asarray(cdf(np.nextafter(x, -np.inf)), dtype=float)
    # ties: the ECDF jumps once per distinct value
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    d = max(float(np.max(upper - f)), float(np.max(f_left - lower)), 0.0)
    return _report(d, n, (n,), reference)


def ks_two_sample(a, b) -> KsReport:
    a, b = np.sort(_nonempty(a)), np.sort(_nonempty(b))
    pts = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, pts, side="right") / a.size
                            - np.searchsorted(b, pts, side="right") / b.size)))
    n, m = a.size, b.size
    return _report(d, n * m / (n + m), (n, m), "two-sample")


# --- regime verification ----------------------------------------------------


@dataclass(frozen=True)
class RateLaws:
    """Rate laws supplied next to the numeric rates; ``mu`` selects the null model."""

    u1: Optional[RateExpr] = None
    u2: Optional[RateExpr] = None
    v1: Optional[RateExpr] = None
    v2: Optional[RateExpr] = None
    mu: Optional[RateExpr] = None

    def classify(self) -> Regime:
        if self.mu is not None:
            return classify_null(self.mu)
        missing = [k for k in ("u1", "u2", "v1", "v2") if getattr(self, k) is None]
        if missing:
            raise ConfigError("missing-rate-law", f"classification needs laws for {', '.join(missing)}")
        return classify_theorem1(self.u1, self.u2, self.v1, self.v2)


@dataclass(frozen=True)
class Thresholds:
    ks: float = 0.1
    window: float = 0.1
    path_min: float = 0.95
    p_zero_tol: float = 0.05
    max_timeout_fraction: float = 0.01


def _check_location(sample: np.ndarray, law: LimitLaw, th: Thresholds) -> dict:
    if sample.size == 0:
        return {"kind": "empty", "pass": False}
    if isinstance(law, PointMass):
        med = float(np.median(sample))
        return {"kind": "median-window", "target": law.center, "median": med,
                "window": th.window, "pass": abs(med - law.center) <= th.window}
    if isinstance(law, BernoulliMix):
        p0 = float(np.mean(sample == 0))
        pos = sample[sample > 0]
        out = {"kind": "bernoulli-mix", "p_zero": p0, "p_zero_target": law.p_zero,
               "p_zero_pass": abs(p0 - law.p_zero) <= th.p_zero_tol}
        if pos.size:
            ks = ks_one_sample(pos, UniformInterval(0.0, 1.0))
            out["ks_positive"] = {**ks.to_dict(), "pass": ks.statistic <= th.ks}
            out["pass"] = out["p_zero_pass"] and ks.statistic <= th.ks
        else:
            out["pass"] = False
        return out
    ks = ks_one_sample(sample, law)
    return {"kind": "ks", **ks.to_dict(), "pass": ks.statistic <= th.ks}


def check_samples(regime: Regime, tau_scaled, sigma, rho, path_counts: Optional[dict] = None,
                  timeouts: int = 0, thresholds: Thresholds = Thresholds()) -> dict:
    """Compare scaled samples with the regime's limit laws."""
    tau_scaled, sigma, rho = (np.asarray(x, dtype=float) for x in (tau_scaled, sigma, rho))
    n_done = tau_scaled.size
    total = n_done + timeouts
    if n_done:
        ks = ks_one_sample(tau_scaled, regime.tau_law)
        tau = {"D": ks.statistic, "p": ks.p_value, "pass": ks.statistic <= thresholds.ks}
    else:
        tau = {"D": None, "p": None, "pass": False}
    sigma_check = _check_location(sigma, regime.sigma_law, thresholds)
    rho_check = _check_location(rho, regime.rho_law, thresholds)
    fractions = None
    path_pass = True
    if path_counts is not None:
        fractions = {p: c / max(n_done, 1) for p, c in path_counts.items()}
        if regime.path is not None:
            path_pass = fractions.get(regime.path, 0.0) >= thresholds.path_min
    timeout_fraction = timeouts / total if total else 1.0
    timeout_pass = timeout_fraction <= thresholds.max_timeout_fraction
    verified = bool(tau["pass"] and sigma_check["pass"] and rho_check["pass"] and path_pass and timeout_pass)
    return {
        "ks": {"tau": tau},
        "sigma_check": sigma_check,
        "rho_check": rho_check,
        "path_fractions": fractions,
        "path_check": {"path": regime.path, "min_fraction": thresholds.path_min, "pass": path_pass},
        "timeout_fraction": timeout_fraction,
        "timeout_pass": timeout_pass,
        "verified": verified,
    }


@dataclass
class Verification:
    regime: Regime
    report: dict
    ensemble: Optional[EnsembleResult] = None

    @property
    def verified(self) -> Optional[bool]:
        return self.report.get("verified")


def verify_regime(config: CryptConfig, laws: RateLaws, variant: Variant | str = Variant.H2,
                  engine: str = "fast", replicates: int = 10_000, master_seed: int = 0,
                  thresholds: Thresholds = Thresholds(), threads: int = 1) -> Verification:
    """Classify, simulate, and check the scaled outcomes against the regime's limit laws.

    Regimes without a limit law (boundary or degenerate) get a
    classification-only report with ``verified`` set to None.
    """
    regime = laws.classify()
    head = {"regime": regime.to_dict(), "alpha": regime.alpha, "seed": master_seed,
            "replicates": replicates}
    if not regime.verifiable:
        return Verification(regime, {**head, "scaling_factor": None, "verified": None})
    factor = scaling_factor(regime, config)
    ens = run_ensemble(config, variant, engine, replicates, master_seed, scale=factor, threads=threads)
    checks = check_samples(regime, ens.tau_scaled, ens.sigma, ens.rho, ens.path_counts, ens.timeouts, thresholds)
    return Verification(regime, {**head, "scaling_factor": factor, **checks}, ens)


def ecdf_table(sample, law: Optional[LimitLaw], points: int = 201) -> list[tuple[float, float, float]]:
    """(t, empirical cdf, limit cdf) on a grid spanning the sample."""
    x = np.sort(_nonempty(sample))
    grid = np.unique(np.quantile(x, np.linspace(0, 1, points)))
    emp = empirical_cdf(x, grid)
    ref = law.cdf(grid) if law is not None else np.full(grid.shape, np.nan)
    return list(zip(grid.tolist(), emp.tolist(), np.asarray(ref, dtype=float).tolist()))
