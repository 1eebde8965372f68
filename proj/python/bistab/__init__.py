"""Bilinear feedback stabilization on spectral truncations."""

from ._bistab import (
    SpectralSystem,
    build_model,
    estimate_delta,
    fit_power,
    lemma1_verify,
    parse_config,
    run_config,
    simulate,
    validate_bound,
)

__all__ = [
    "SpectralSystem",
    "build_model",
    "estimate_delta",
    "fit_power",
    "lemma1_verify",
    "parse_config",
    "run_config",
    "simulate",
    "validate_bound",
]
