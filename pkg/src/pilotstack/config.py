"""TOML application config: vehicle, camera, and pilot settings.

Every key is optional and falls back to the dataclass default; unknown
keys are rejected so a typo cannot silently revert a tuning change.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .actuation import ServoConfig
from .nn.train import TrainConfig
from .track import CameraModel, TrackSpec, default_track, load_track
from .vehicle import VehicleParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PilotConfig:
    """Closed-loop driving settings."""

    loop_rate_hz: float = 20.0
    throttle_scale: float = 1.0
    steering_trim: float = 0.0

    def __post_init__(self):
        # the dynamics step caps dt at 0.1 s, so the loop cannot run slower
        # than 10 Hz
        if not self.loop_rate_hz >= 10.0:
            raise ConfigError("loop_rate_hz must be >= 10")
        if not 0.0 < self.throttle_scale <= 1.0:
            raise ConfigError("throttle_scale must be in (0, 1]")
        if not -0.2 <= self.steering_trim <= 0.2:
            raise ConfigError("steering_trim must be in [-0.2, 0.2]")


@dataclass(frozen=True)
class AppConfig:
    vehicle: VehicleParams
    camera: CameraModel
    servo: ServoConfig
    pilot: PilotConfig
    train: TrainConfig
    track_path: str = "default"


def _build_section(cls, mapping: dict, section: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value in [{section}]: {exc}") from exc


def default_config() -> AppConfig:
    return AppConfig(vehicle=VehicleParams(), camera=CameraModel(),
                     servo=ServoConfig(), pilot=PilotConfig(),
                     train=TrainConfig())


_SECTIONS = (("vehicle", VehicleParams), ("camera", CameraModel),
             ("servo", ServoConfig), ("pilot", PilotConfig),
             ("train", TrainConfig))


def config_from_mapping(data: dict) -> AppConfig:
    known = {name for name, _ in _SECTIONS} | {"track_path"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    built = {}
    for name, cls in _SECTIONS:
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        built[name] = _build_section(cls, section, name)
    track_path = data.get("track_path", "default")
    if not isinstance(track_path, str) or not track_path:
        raise ConfigError("track_path must be a non-empty string")
    return AppConfig(track_path=track_path, **built)


def load_config(path) -> AppConfig:
    """Parse a TOML config file. Missing file is an error; use
    default_config() when no file was given at all."""
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {p}: {exc}") from exc
    return config_from_mapping(data)


def resolve_track(track_path: str) -> TrackSpec:
    """"default" means the built-in oval; anything else is a JSON file path."""
    if track_path == "default":
        return default_track()
    return load_track(track_path)
