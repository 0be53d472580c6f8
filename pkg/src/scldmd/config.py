"""Run configuration: one TOML file plus command-line overrides.

Example::

    seed = 0

    [kernel]
    mu_d = 11.0
    mu_v = 10.0          # or one value per channel: [10.0, 10.0]

    [decomposition]
    rel_tol = 1e-14

    [experiment]
    system = "duffing"
    grid_counts = [15, 15]
    grid_low = [-3.0, -3.0]
    grid_high = [3.0, 3.0]
    dt = 0.05
    duration = 1.0

    [experiment.controls]
    n_terms = 15
    frequency_range = [1.0, 3.0]
    phase_range = [-1.0, 1.0]
    amplitude_range = [-1.0, 1.0]
    shared = false

    [prediction]
    x0 = [2.0, -2.0]
    input = "sin:1:1,cos:1:2"
    horizon = 10.0
    dt = 0.05

    [evaluate]
    counts = [9, 9]
    low = [-2.0, -2.0]
    high = [2.0, 2.0]
"""

from __future__ import annotations

import sys
from pathlib import Path

from .benchmark import ExperimentConfig
from .errors import ConfigError
from .kernels import KernelConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# (section, key) -> ExperimentConfig field
_FIELDS = {
    (None, "seed"): "seed",
    ("kernel", "mu_d"): "mu_d",
    ("kernel", "mu_v"): "mu_v",
    ("decomposition", "rel_tol"): "rel_tol",
    ("decomposition", "n_modes"): "n_modes",
    ("experiment", "system"): "system",
    ("experiment", "grid_counts"): "grid_counts",
    ("experiment", "grid_low"): "grid_low",
    ("experiment", "grid_high"): "grid_high",
    ("experiment", "dt"): "dt",
    ("experiment", "duration"): "duration",
    ("experiment.controls", "n_terms"): "n_terms",
    ("experiment.controls", "frequency_range"): "frequency_range",
    ("experiment.controls", "phase_range"): "phase_range",
    ("experiment.controls", "amplitude_range"): "amplitude_range",
    ("experiment.controls", "shared"): "shared_control",
    ("prediction", "x0"): "x0",
    ("prediction", "input"): "prediction_input",
    ("prediction", "horizon"): "horizon",
    ("prediction", "dt"): "prediction_dt",
    ("evaluate", "counts"): "eval_counts",
    ("evaluate", "low"): "eval_low",
    ("evaluate", "high"): "eval_high",
}


def _flatten(doc: dict, section=None, out=None) -> dict:
    out = {} if out is None else out
    for key, value in doc.items():
        if isinstance(value, dict):
            sub = key if section is None else f"{section}.{key}"
            _flatten(value, sub, out)
            continue
        target = _FIELDS.get((section, key))
        if target is None:
            where = key if section is None else f"{section}.{key}"
            raise ConfigError(f"unknown configuration key {where!r}")
        out[target] = value
    return out


def read_config_file(path) -> dict:
    """Parse a TOML config into ``ExperimentConfig`` keyword arguments."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return _flatten(doc)


def build_config(path=None, **overrides) -> ExperimentConfig:
    """Config from an optional file, with non-``None`` overrides winning."""
    values = read_config_file(path) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    system = values.pop("system", "duffing")
    try:
        return ExperimentConfig.for_system(system, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def kernel_for(cfg: ExperimentConfig, m: int) -> KernelConfig:
    """Kernel config for data with ``m`` inputs."""
    if isinstance(cfg.mu_v, tuple):
        if len(cfg.mu_v) != m + 1:
            raise ConfigError(f"mu_v: {len(cfg.mu_v)} values given but the data need {m + 1}")
        return KernelConfig(cfg.mu_d, cfg.mu_v)
    return KernelConfig.shared(cfg.mu_d, cfg.mu_v, m)
