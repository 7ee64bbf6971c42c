"""Command-line front end: ``crypt-regimes <simulate|classify|verify|oracle-check>``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error. Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .asymptotics.classify import scaling_factor
from .asymptotics.rates import RateExpr
from .core import DEFAULT_MAX_TIME, ConfigError, CryptConfig, Variant, validate_config
from .harness import (
    ENGINES,
    RateLaws,
    Thresholds,
    ecdf_table,
    ks_two_sample,
    run_ensemble,
    verify_regime,
)

COMMANDS = ("simulate", "classify", "verify", "oracle-check")
CSV_HEADER = ["replicate", "tau", "tau_scaled", "sigma", "rho", "path", "stem_type1_time", "status"]
WIDE_HEADER = ["sigma_generation", "rho_generation", "cancer_type1_time"]
RATE_KEYS = ("u1", "u2", "v1", "v2")
LAW_KEYS = ("u1_law", "u2_law", "v1_law", "v2_law", "mu_law")
CONFIG_KEYS = frozenset(("l", "max_time", "mu", "replicates", "seed", "engine", "variant", "threads",
                         "ks_threshold") + RATE_KEYS + LAW_KEYS)


class UsageError(Exception):
    def __init__(self, kind: str, message: str, flag: Optional[str] = None):
        super().__init__(message)
        self.kind, self.message, self.flag = kind, message, flag

    def diagnostic(self) -> dict:
        out = {"error": self.kind, "message": self.message}
        if self.flag:
            out["flag"] = self.flag
        return out


# --- invocation -------------------------------------------------------------


@dataclass(frozen=True)
class Invocation:
    command: str
    config: Optional[str] = None
    replicates: Optional[int] = None
    seed: Optional[int] = None
    engine: Optional[str] = None
    variant: Optional[str] = None
    out: Optional[str] = None
    threads: Optional[int] = None
    max_time: Optional[float] = None
    wide: bool = False
    emit_config: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "required" in message:
            raise UsageError("missing-config", message, "--config")
        if "invalid choice" in message:
            raise UsageError("bad-choice", message)
        if "invalid" in message and "value" in message:
            raise UsageError("type-mismatch", message)
        raise UsageError("usage", message)


def _max_time(text: str) -> float:
    x = float(text)
    if math.isnan(x) or x <= 0:
        raise ValueError(text)
    return x


def _parser() -> _Parser:
    p = _Parser(prog="crypt-regimes", add_help=True,
                description="Simulate the crypt model and check scaled outcomes against limit laws.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--replicates", type=int, metavar="R")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--threads", type=int, metavar="T")
    p.add_argument("--max-time", type=_max_time, metavar="X", dest="max_time")
    p.add_argument("--wide", action="store_true")
    p.add_argument("--emit-config", action="store_true", dest="emit_config",
                   help="print the fully resolved config instead of running")
    return p


def parse_invocation(argv: list[str]) -> Invocation:
    # collect unknown flags ourselves so the error names the flag
    ns, extra = _parser().parse_known_args(argv)
    if extra:
        raise UsageError("unknown-flag", f"unrecognised argument {extra[0]!r}", extra[0])
    return Invocation(**vars(ns))


# --- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class Settings:
    config: CryptConfig
    laws: RateLaws
    replicates: int
    seed: int
    engine: str
    variant: Variant
    threads: int
    ks_threshold: float


def _number(d: dict, key: str, kind=float):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
        raise ConfigError("type-mismatch", f"{key} must be {'an integer' if kind is int else 'a number'}")
    return kind(v)


def load_config_file(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError("missing-config", f"config file {path!r} not found", "--config") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config-syntax", f"{path}: {exc}") from None
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError("unknown-key", f"unknown config key(s): {', '.join(unknown)}")
    return data


def resolve(inv: Invocation, data: dict) -> Settings:
    """Merge file values and command-line overrides (overrides win)."""
    if "l" not in data:
        raise ConfigError("missing-key", "config needs l")
    l = _number(data, "l", int)
    laws = {k[:-4]: RateExpr.parse(data[k]) for k in LAW_KEYS if k in data}
    if "mu" in laws and any(k in laws for k in RATE_KEYS):
        raise ConfigError("conflicting-keys", "mu_law cannot be combined with per-rate laws")
    rates = {}
    if "mu" in data or "mu" in laws:
        if any(k in data for k in RATE_KEYS):
            raise ConfigError("conflicting-keys", "mu cannot be combined with u1, u2, v1, v2")
        mu = _number(data, "mu") if "mu" in data else laws["mu"].at(l)
        rates = dict.fromkeys(RATE_KEYS, mu)
    else:
        for k in RATE_KEYS:
            if k in data:
                rates[k] = _number(data, k)
            elif k in laws:
                rates[k] = laws[k].at(l)
            else:
                raise ConfigError("missing-key", f"config needs {k} or {k}_law")
    max_time = inv.max_time if inv.max_time is not None else (
        _number(data, "max_time") if "max_time" in data else DEFAULT_MAX_TIME)
    config = CryptConfig(l, rates["u1"], rates["u2"], rates["v1"], rates["v2"], max_time=max_time)
    replicates = inv.replicates if inv.replicates is not None else (
        _number(data, "replicates", int) if "replicates" in data else 1000)
    if replicates < 1:
        raise UsageError("bad-replicates", f"replicates must be at least 1, got {replicates}", "--replicates")
    seed = inv.seed if inv.seed is not None else (_number(data, "seed", int) if "seed" in data else 0)
    engine = inv.engine or data.get("engine", "fast")
    if engine not in ENGINES:
        raise ConfigError("bad-choice", f"engine must be one of {', '.join(ENGINES)}")
    variant = Variant.parse(inv.variant or data.get("variant", "h2"))
    threads = inv.threads if inv.threads is not None else (
        _number(data, "threads", int) if "threads" in data else (os.cpu_count() or 1))
    if threads < 1:
        raise UsageError("bad-threads", "threads must be at least 1", "--threads")
    ks = _number(data, "ks_threshold") if "ks_threshold" in data else Thresholds().ks
    return Settings(config, RateLaws(**laws), replicates, seed, engine, variant, threads, ks)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def emit_config(s: Settings) -> str:
    """TOML text that resolves back to ``s``."""
    c = s.config
    lines = [f"l = {c.l}"]
    if s.laws.mu is not None:
        lines.append(f"mu = {_fmt(float(c.u1))}")
    else:
        lines += [f"{k} = {_fmt(float(getattr(c, k)))}" for k in RATE_KEYS]
    lines.append(f"max_time = {_fmt(float(c.max_time))}")
    for k in ("u1", "u2", "v1", "v2", "mu"):
        law = getattr(s.laws, k)
        if law is not None:
            lines.append(f"{k}_law = [{', '.join(_fmt(float(x)) for x in law.as_list())}]")
    lines += [f"replicates = {s.replicates}", f"seed = {s.seed}", f'engine = "{s.engine}"',
              f'variant = "{s.variant.value}"', f"threads = {s.threads}", f"ks_threshold = {_fmt(s.ks_threshold)}"]
    return "\n".join(lines) + "\n"


# --- commands -----------------------------------------------------------------


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _scale_for(s: Settings) -> Optional[float]:
    try:
        regime = s.laws.classify()
    except ConfigError:
        return None
    if not regime.verifiable:
        return None
    return scaling_factor(regime, s.config)


def outcome_csv(ens, wide: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + (WIDE_HEADER if wide else []))
    l = ens.config.l
    for r, o in enumerate(ens.outcomes):
        scaled = o.tau * ens.scale if (o.occurred and ens.scale is not None) else None
        row = [r, _fmt(float(o.tau)), _fmt(scaled),
               _fmt(o.sigma_gen / l) if o.occurred else "", _fmt(o.rho_gen / l) if o.occurred else "",
               o.path or "", _fmt(o.stem_type1_time), o.status]
        if wide:
            row += [_fmt(o.sigma_gen), _fmt(o.rho_gen), _fmt(o.cancer_type1_time)]
        w.writerow(row)
    return buf.getvalue()


def cmd_simulate(inv: Invocation, s: Settings) -> int:
    ens = run_ensemble(s.config, s.variant, s.engine, s.replicates, s.seed, scale=_scale_for(s),
                       threads=s.threads)
    _write(outcome_csv(ens, inv.wide), inv.out)
    return 0


def cmd_classify(inv: Invocation, s: Settings) -> int:
    regime = s.laws.classify()
    out = regime.to_dict()
    out["scaling_factor"] = scaling_factor(regime, s.config) if regime.verifiable else None
    _write(json.dumps(out, indent=2) + "\n", inv.out)
    return 0


def _json_ready(x):
    if isinstance(x, dict):
        return {k: _json_ready(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_ready(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if hasattr(x, "item"):
        return _json_ready(x.item())
    return x


def cmd_verify(inv: Invocation, s: Settings) -> int:
    th = Thresholds(ks=s.ks_threshold)
    v = verify_regime(s.config, s.laws, s.variant, s.engine, s.replicates, s.seed, th, s.threads)
    rep = dict(v.report)
    rep["regime"] = rep["regime"]["case"]
    rep["classification"] = v.regime.to_dict()
    _write(json.dumps(_json_ready(rep), indent=2) + "\n", inv.out)
    if inv.out and v.ensemble is not None and v.ensemble.tau_scaled.size:
        table = ecdf_table(v.ensemble.tau_scaled, v.regime.tau_law)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "ecdf", "limit_cdf"])
        w.writerows([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in table)
        Path(inv.out).with_suffix(".ecdf.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    if v.verified is None:
        return 0
    return 0 if v.verified else 1


def cmd_oracle_check(inv: Invocation, s: Settings) -> int:
    if s.variant is Variant.H1:
        raise UsageError("unsupported-variant", "oracle-check compares the fast engine, which covers h2, m1, m2, m3",
                         "--variant")
    # the fast sample uses the next master seed so the two samples are independent
    exact = run_ensemble(s.config, s.variant, "exact", s.replicates, s.seed, threads=s.threads)
    fast = run_ensemble(s.config, s.variant, "fast", s.replicates, s.seed + 1, threads=s.threads)
    summary = lambda e: {"n": int(e.tau.size), "timeouts": e.timeouts,
                         "mean_tau": float(e.tau.mean()) if e.tau.size else None}
    out = {"variant": s.variant.value, "l": s.config.l, "replicates": s.replicates, "seed": s.seed,
           "exact": summary(exact), "fast": summary(fast)}
    if exact.tau.size and fast.tau.size:
        ks = ks_two_sample(exact.tau, fast.tau)
        out["ks"] = {"D": ks.statistic, "p": ks.p_value, "reject_1pct": ks.reject}
        out["pass"] = not ks.reject
    else:
        out["ks"] = None
        out["pass"] = False
    _write(json.dumps(out, indent=2) + "\n", inv.out)
    return 0 if out["pass"] else 1


_COMMANDS = {"simulate": cmd_simulate, "classify": cmd_classify, "verify": cmd_verify,
             "oracle-check": cmd_oracle_check}


def run_command(inv: Invocation) -> int:
    data = load_config_file(inv.config)
    s = resolve(inv, data)
    validate_config(s.config, s.variant)
    if inv.emit_config:
        _write(emit_config(s), inv.out)
        return 0
    return _COMMANDS[inv.command](inv, s)


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] in ("-h", "--help"):
        _parser().print_help()
        return 0
    try:
        return run_command(parse_invocation(argv))
    except UsageError as exc:
        err = exc.diagnostic()
    except ConfigError as exc:
        err = {"error": exc.kind, "message": str(exc)}
    except OSError as exc:
        err = {"error": "io-error", "message": str(exc)}
    sys.stderr.write(json.dumps(err) + "\n")
    return 2
