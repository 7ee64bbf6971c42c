"""Simulation and asymptotic analysis of a hierarchical two-mutation crypt model."""

from .core import (
    ConfigError,
    CryptConfig,
    RngStream,
    SimOutcome,
    Variant,
    derive_replicate_stream,
    generation_size,
    total_descendants,
    validate_config,
)
from .engine import simulate_coupled, simulate_fast
from .oracle import simulate_coupled_h1_h2, simulate_exact

__all__ = [
    "ConfigError",
    "CryptConfig",
    "RngStream",
    "SimOutcome",
    "Variant",
    "derive_replicate_stream",
    "generation_size",
    "total_descendants",
    "validate_config",
    "simulate_coupled",
    "simulate_coupled_h1_h2",
    "simulate_exact",
    "simulate_fast",
]
