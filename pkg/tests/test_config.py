"""TOML config parsing, defaults, and validation."""

from pathlib import Path

import pytest

from pilotstack.actuation import ServoConfig
from pilotstack.config import (AppConfig, ConfigError, PilotConfig,
                               config_from_mapping, default_config,
                               load_config, resolve_track)
from pilotstack.nn.train import TrainConfig
from pilotstack.track import CameraModel, default_track, save_track
from pilotstack.vehicle import VehicleParams

SHIPPED = Path(__file__).resolve().parent.parent / "configs" / "default.toml"


def write_toml(tmp_path, text):
    p = tmp_path / "app.toml"
    p.write_text(text)
    return p


def test_default_config_uses_dataclass_defaults():
    cfg = default_config()
    assert cfg.vehicle == VehicleParams()
    assert cfg.camera == CameraModel()
    assert cfg.servo == ServoConfig()
    assert cfg.pilot == PilotConfig()
    assert cfg.train == TrainConfig()
    assert cfg.track_path == "default"


def test_shipped_default_file_matches_builtin_defaults():
    assert load_config(SHIPPED) == default_config()


def test_partial_file_keeps_other_defaults(tmp_path):
    p = write_toml(tmp_path, "[pilot]\nthrottle_scale = 0.8\n")
    cfg = load_config(p)
    assert cfg.pilot.throttle_scale == 0.8
    assert cfg.pilot.loop_rate_hz == 20.0
    assert cfg.vehicle == VehicleParams()
    assert cfg.track_path == "default"


def test_empty_file_is_all_defaults(tmp_path):
    p = write_toml(tmp_path, "")
    assert load_config(p) == default_config()


def test_train_section_override(tmp_path):
    p = write_toml(tmp_path, "[train]\nepochs = 3\nbatch_size = 8\n")
    cfg = load_config(p)
    assert cfg.train.epochs == 3
    assert cfg.train.batch_size == 8
    assert cfg.train.learning_rate == 1e-3


def test_unknown_section_is_rejected(tmp_path):
    p = write_toml(tmp_path, "[engine]\ncylinders = 4\n")
    with pytest.raises(ConfigError, match=r"unknown section\(s\): engine"):
        load_config(p)


def test_unknown_key_names_its_section(tmp_path):
    p = write_toml(tmp_path, "[vehicle]\nwheels = 4\n")
    with pytest.raises(ConfigError,
                       match=r"unknown key\(s\) in \[vehicle\]: wheels"):
        load_config(p)


def test_bad_value_names_its_section(tmp_path):
    p = write_toml(tmp_path, "[vehicle]\nwheelbase_m = -1.0\n")
    with pytest.raises(ConfigError, match=r"bad value in \[vehicle\]"):
        load_config(p)
    p = write_toml(tmp_path, "[pilot]\nloop_rate_hz = 9.9\n")
    with pytest.raises(ConfigError, match=r"bad value in \[pilot\]"):
        load_config(p)


def test_section_must_be_a_table():
    with pytest.raises(ConfigError, match=r"\[vehicle\] must be a table"):
        config_from_mapping({"vehicle": 3})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="config file not found"):
        load_config(tmp_path / "nope.toml")


def test_invalid_toml(tmp_path):
    p = write_toml(tmp_path, "pilot = [broken\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(p)


def test_track_path_validation():
    with pytest.raises(ConfigError, match="track_path"):
        config_from_mapping({"track_path": ""})
    with pytest.raises(ConfigError, match="track_path"):
        config_from_mapping({"track_path": 3})
    cfg = config_from_mapping({"track_path": "courses/figure8.json"})
    assert cfg.track_path == "courses/figure8.json"


# -- pilot bounds -----------------------------------------------------------

def test_pilot_rate_bound():
    assert PilotConfig(loop_rate_hz=10.0).loop_rate_hz == 10.0
    with pytest.raises(ConfigError, match="loop_rate_hz"):
        PilotConfig(loop_rate_hz=9.9)


def test_pilot_throttle_scale_bounds():
    assert PilotConfig(throttle_scale=1.0).throttle_scale == 1.0
    with pytest.raises(ConfigError, match="throttle_scale"):
        PilotConfig(throttle_scale=0.0)
    with pytest.raises(ConfigError, match="throttle_scale"):
        PilotConfig(throttle_scale=1.1)


def test_pilot_trim_bounds():
    assert PilotConfig(steering_trim=0.2).steering_trim == 0.2
    assert PilotConfig(steering_trim=-0.2).steering_trim == -0.2
    with pytest.raises(ConfigError, match="steering_trim"):
        PilotConfig(steering_trim=0.21)
    with pytest.raises(ConfigError, match="steering_trim"):
        PilotConfig(steering_trim=-0.25)


# -- track resolution -------------------------------------------------------

def test_resolve_track_default():
    t = resolve_track("default")
    assert t.length_m == pytest.approx(13.0, abs=1e-9)


def test_resolve_track_from_file(tmp_path):
    p = tmp_path / "course.json"
    save_track(default_track(length_m=14.0), p)
    t = resolve_track(str(p))
    assert t.length_m == pytest.approx(14.0, abs=1e-9)
