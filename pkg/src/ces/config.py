"""Experiment configuration: schema, defaults, canonical form, manifest.

Configs are JSON.  Unknown keys are rejected and every value is range
checked with a full field path in the error message.  Missing keys fall
back to the packaged ``defaults.json`` (the published experimental
parameters); the ``CES_DEFAULTS`` environment variable may point at an
alternative defaults file.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .detection import DetectorParams, MeasurementSetting
from .errors import ConfigError
from .protocol import EfficiencyParams, NoiseParams

DEFAULTS_ENV = "CES_DEFAULTS"
_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ExperimentConfig:
    noise: NoiseParams
    efficiency: EfficiencyParams
    detector: DetectorParams
    dt_us: float
    settings: tuple[MeasurementSetting, ...]
    seed: int
    n_sequences: int

    def to_dict(self) -> dict:
        return {
            "noise": {
                "v0": self.noise.v0,
                "tau_e_us": self.noise.tau_e_us,
                "p_white": self.noise.p_white,
                "eta_pump": self.noise.eta_pump,
            },
            "efficiency": {
                "p_photon1": self.efficiency.p_photon1,
                "p_photon2": self.efficiency.p_photon2,
                "eta_det": self.efficiency.eta_det,
                "rep_rate_khz": self.efficiency.rep_rate_khz,
            },
            "detector": {
                "eta_det": self.detector.eta_det,
                "dark_rate": self.detector.dark_rate,
                "window_fraction": self.detector.window_fraction,
                "late_emission_error": self.detector.late_emission_error,
            },
            "dt_us": self.dt_us,
            "settings": [[s.alpha_deg, s.beta_deg] for s in self.settings],
            "seed": self.seed,
            "n_sequences": self.n_sequences,
        }


# (lo, hi, lo_open, hi_open); None means unbounded on that side.
_RANGES = {
    "noise.v0": (0.0, 1.0, False, False),
    "noise.tau_e_us": (0.0, None, True, False),
    "noise.p_white": (0.0, 1.0, False, False),
    "noise.eta_pump": (0.0, 1.0, False, False),
    "efficiency.p_photon1": (0.0, 1.0, False, False),
    "efficiency.p_photon2": (0.0, 1.0, False, False),
    "efficiency.eta_det": (0.0, 1.0, False, False),
    "efficiency.rep_rate_khz": (0.0, None, True, False),
    "detector.eta_det": (0.0, 1.0, False, False),
    "detector.dark_rate": (0.0, 1.0, False, False),
    "detector.window_fraction": (0.0, 1.0, True, False),
    "detector.late_emission_error": (0.0, 1.0, False, False),
    "dt_us": (0.0, None, False, False),
}

_SECTIONS = {
    "noise": ["v0", "tau_e_us", "p_white", "eta_pump"],
    "efficiency": ["p_photon1", "p_photon2", "eta_det", "rep_rate_khz"],
    "detector": ["eta_det", "dark_rate", "window_fraction", "late_emission_error"],
}
_TOP_KEYS = ["noise", "efficiency", "detector", "dt_us", "settings", "seed", "n_sequences"]


def _as_number(path: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _check_range(path: str, value: float) -> float:
    lo, hi, lo_open, hi_open = _RANGES[path]
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ConfigError(f"{path}: value {value} below allowed range")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ConfigError(f"{path}: value {value} above allowed range")
    return value


def _merge_section(name: str, defaults: dict, override: dict) -> dict:
    if not isinstance(override, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = [k for k in override if k not in _SECTIONS[name]]
    if unknown:
        raise ConfigError(f"{name}: unknown key {unknown[0]!r}")
    merged = dict(defaults)
    merged.update(override)
    return {
        key: _check_range(f"{name}.{key}", _as_number(f"{name}.{key}", merged[key]))
        for key in _SECTIONS[name]
    }


def _parse_settings(raw) -> tuple[MeasurementSetting, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("settings: expected a non-empty list of [alpha_deg, beta_deg] pairs")
    out = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"settings[{i}]: expected [alpha_deg, beta_deg]")
        try:
            out.append(
                MeasurementSetting(
                    _as_number(f"settings[{i}][0]", pair[0]),
                    _as_number(f"settings[{i}][1]", pair[1]),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"settings[{i}]: {exc}") from exc
    return tuple(out)


def _defaults_dict() -> dict:
    override = os.environ.get(DEFAULTS_ENV)
    if override:
        try:
            return json.loads(Path(override).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read defaults file {override!r}: {exc}") from exc
    with resources.files("ces").joinpath("defaults.json").open() as fh:
        return json.load(fh)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    unknown = [k for k in data if k not in _TOP_KEYS]
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")
    defaults = _defaults_dict()

    sections = {}
    for name in _SECTIONS:
        sections[name] = _merge_section(name, defaults.get(name, {}), data.get(name, {}))
    dt_us = _check_range("dt_us", _as_number("dt_us", data.get("dt_us", defaults["dt_us"])))
    settings = _parse_settings(data.get("settings", defaults["settings"]))

    seed = data.get("seed", defaults["seed"])
    if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed <= _MAX_SEED):
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    n_sequences = data.get("n_sequences", defaults["n_sequences"])
    if isinstance(n_sequences, bool) or not isinstance(n_sequences, int) or n_sequences <= 0:
        raise ConfigError(f"n_sequences: expected a positive integer, got {n_sequences!r}")

    try:
        noise = NoiseParams(**sections["noise"])
        efficiency = EfficiencyParams(**sections["efficiency"])
        detector = DetectorParams(**sections["detector"])
    except ValueError as exc:  # dataclass validators; ranges already checked
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        noise=noise,
        efficiency=efficiency,
        detector=detector,
        dt_us=dt_us,
        settings=settings,
        seed=seed,
        n_sequences=n_sequences,
    )


def load_config(path=None) -> ExperimentConfig:
    """Load a config file, filling gaps from the shipped defaults.

    ``path=None`` (or an empty JSON object) yields the pure defaults.
    """
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def _canonical(obj) -> str:
    """Deterministic text form: sorted keys, 17-significant-digit floats."""
    if isinstance(obj, dict):
        inner = ",".join(f"{json.dumps(k)}:{_canonical(obj[k])}" for k in sorted(obj))
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(x) for x in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(_canonical(cfg.to_dict()).encode("utf-8")).hexdigest()
