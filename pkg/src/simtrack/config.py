"""Flat key = value config files and seeded sub-streams.

CLI flags override file values. Unknown keys are rejected by name. All
randomness flows from one per-run seed through named sub-streams so each
stage stays independently reproducible.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError

CONFIG_KEYS: dict[str, type] = {
    "seed": int,
    "fn": int,
    "alpha": float,
    "gamma": float,
    "delta": float,
    "net": str,
    "matcher": str,
    "provider": str,
    "min_confidence": float,
    "min_score": float,
    "iou_threshold": float,
    "epochs": int,
    "batch_size": int,
    "lr": float,
    "margin": float,
    "freeze_epochs": int,
    "hidden_dim": int,
    "descriptor_dim": int,
    "identities": int,
    "frames": int,
    "pairs_per_class": int,
    "confusers": int,
    "noise": float,
    "dropout": float,
    "spurious_rate": float,
    "speed": float,
    "threads": int,
}

STREAMS = {"trainer": 1, "synth": 2, "bench": 3, "oracle": 4}


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment; later keys win."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
            try:
                values[key] = CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: bad value for {key!r}: {exc}") from exc
    return values


def merge_config(file_values: dict, flag_values: dict) -> dict:
    """File values overlaid with CLI flags (flags win when not None)."""
    merged = dict(file_values)
    for key, value in flag_values.items():
        if value is not None:
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    return merged


def substream_seed(seed: int, name: str) -> int:
    """Derived integer seed for a named sub-stream of the run seed."""
    return int(np.random.SeedSequence([seed, STREAMS[name]]).generate_state(1)[0])


def substream_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[name]])
