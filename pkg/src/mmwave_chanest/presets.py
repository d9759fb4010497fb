"""Shipped benchmark presets (each is a plain config file in ``presets/``)."""

from __future__ import annotations

from importlib import resources

from .bench import ExperimentSpec, parse_config_text

__all__ = ["PRESETS", "preset_names", "preset_text", "load_preset"]

# name -> one-line summary shown by the CLI
PRESETS = {
    "nmse-vs-training-length": "time-domain estimator error vs SNR for several training lengths",
    "nmse-vs-rf-chains": "time-domain estimator error vs SNR for 1/2/4 receive chains",
    "rate-vs-training-length": "single-stream spectral efficiency vs training length",
    "nmse-vs-antennas": "per-subcarrier estimator error as both arrays grow",
    "nmse-vs-paths": "all three estimators vs the number of propagation paths",
    "nmse-vs-subcarriers": "combined estimator error vs number of pilot subcarriers",
    "estimator-comparison": "all three estimators vs SNR at a fixed training length",
    "nmse-vs-training-length-comparison": "all three estimators vs training length",
    "exact-recovery": "on-grid channels: greedy pursuit recovers supports exactly",
}


def preset_names():
    return tuple(PRESETS)


def preset_text(name: str) -> str:
    """Raw config text of a shipped preset."""
    if name not in PRESETS:
        known = ", ".join(PRESETS)
        raise ValueError(f"unknown preset '{name}' (available: {known})")
    return (resources.files(__package__) / "presets" / f"{name}.cfg").read_text()


def load_preset(name: str) -> ExperimentSpec:
    return parse_config_text(preset_text(name))
