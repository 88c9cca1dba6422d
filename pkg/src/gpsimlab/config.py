"""Configuration schema and JSON loading.

One flat file of small sections, all keys carrying explicit units in
their names. Loading is strict: unknown keys are rejected with their
full dotted path, wrong scalar types likewise, so a typo in a config
cannot silently fall back to a default.
"""

import dataclasses
import difflib
import json
from dataclasses import dataclass

from .receiver import PROFILES


class ConfigError(ValueError):
    """A config file failed validation; the message carries the key path."""


@dataclass(frozen=True)
class DeploymentConfig:
    radius_m: float = 80.0
    separation_m: float = 500.0
    max_speed_kmh: float = 110.0
    receiver: str = "dedicated"


@dataclass(frozen=True)
class DelayModelConfig:
    mean_delay_ms: float = 30.0
    wander_sigma_ms: float = 0.02
    noise_sigma_ms: float = 0.5
    sample_count: int = 1800


@dataclass(frozen=True)
class BudgetConfig:
    limit_ms: float = 50.0


@dataclass(frozen=True)
class HandoverConfig:
    trials: int = 50
    live_s: float = 30.0
    blocked_s: float = 30.0
    sim_s: float = 20.0
    pr_noise_m: float = 2.0
    n_sats: int = 8


@dataclass(frozen=True)
class SweepConfig:
    min_offset_ms: float = -250.0
    max_offset_ms: float = 250.0
    step_ms: float = 50.0
    trials: int = 3


@dataclass(frozen=True)
class SyncConfig:
    duration_s: float = 1800.0


@dataclass(frozen=True)
class Config:
    deployment: DeploymentConfig = DeploymentConfig()
    delay_model: DelayModelConfig = DelayModelConfig()
    budget: BudgetConfig = BudgetConfig()
    handover: HandoverConfig = HandoverConfig()
    sweep: SweepConfig = SweepConfig()
    sync: SyncConfig = SyncConfig()


_SECTIONS = {
    "deployment": DeploymentConfig,
    "delay_model": DelayModelConfig,
    "budget": BudgetConfig,
    "handover": HandoverConfig,
    "sweep": SweepConfig,
    "sync": SyncConfig,
}


def default_config() -> Config:
    return Config()


def _unknown_key_error(key: str, known: list[str], path: str) -> ConfigError:
    where = f"{path}.{key}" if path else key
    msg = f"unknown config key {where!r}"
    close = difflib.get_close_matches(key, known, n=1)
    if close:
        msg += f" (did you mean {close[0]!r}?)"
    return ConfigError(msg)


def _coerce_scalar(expected: type, value: object, path: str) -> object:
    # bool is an int subclass; reject it explicitly for numeric fields
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type {expected!r}")


def _section_from_dict(cls: type, data: object, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    fields = {f.name: f.type for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise _unknown_key_error(key, sorted(fields), path)
        kwargs[key] = _coerce_scalar(fields[key], value, f"{path}.{key}")
    return cls(**kwargs)


def _positive(value: float, path: str) -> None:
    if value <= 0:
        raise ConfigError(f"{path}: must be positive, got {value}")


def _validate(cfg: Config) -> Config:
    _positive(cfg.deployment.radius_m, "deployment.radius_m")
    _positive(cfg.deployment.max_speed_kmh, "deployment.max_speed_kmh")
    if cfg.deployment.separation_m < 2 * cfg.deployment.radius_m:
        raise ConfigError(
            "deployment.separation_m: coverages overlap "
            f"({cfg.deployment.separation_m} < 2 * {cfg.deployment.radius_m})"
        )
    if cfg.deployment.receiver not in PROFILES:
        raise ConfigError(
            f"deployment.receiver: unknown profile {cfg.deployment.receiver!r}, "
            f"expected one of {sorted(PROFILES)}"
        )
    _positive(cfg.delay_model.mean_delay_ms, "delay_model.mean_delay_ms")
    if cfg.delay_model.wander_sigma_ms < 0:
        raise ConfigError("delay_model.wander_sigma_ms: must be non-negative")
    if cfg.delay_model.noise_sigma_ms < 0:
        raise ConfigError("delay_model.noise_sigma_ms: must be non-negative")
    if cfg.delay_model.sample_count < 1:
        raise ConfigError("delay_model.sample_count: must be at least 1")
    _positive(cfg.budget.limit_ms, "budget.limit_ms")
    if cfg.handover.trials < 1:
        raise ConfigError("handover.trials: must be at least 1")
    if cfg.handover.n_sats < 4:
        raise ConfigError("handover.n_sats: need at least 4 satellites to solve")
    for name in ("live_s", "blocked_s", "sim_s", "pr_noise_m"):
        _positive(getattr(cfg.handover, name), f"handover.{name}")
    if cfg.sweep.step_ms <= 0:
        raise ConfigError("sweep.step_ms: must be positive")
    if cfg.sweep.min_offset_ms > cfg.sweep.max_offset_ms:
        raise ConfigError("sweep.min_offset_ms: must not exceed sweep.max_offset_ms")
    if cfg.sweep.trials < 1:
        raise ConfigError("sweep.trials: must be at least 1")
    _positive(cfg.sync.duration_s, "sync.duration_s")
    return cfg


def config_from_dict(data: object) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object")
    kwargs = {}
    for key, value in data.items():
        if key not in _SECTIONS:
            raise _unknown_key_error(key, sorted(_SECTIONS), "")
        kwargs[key] = _section_from_dict(_SECTIONS[key], value, key)
    return _validate(Config(**kwargs))


def config_to_dict(cfg: Config) -> dict:
    return {name: dataclasses.asdict(getattr(cfg, name)) for name in _SECTIONS}


def load_config(path: str) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return config_from_dict(data)
