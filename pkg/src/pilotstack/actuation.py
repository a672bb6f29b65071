"""Mapping from normalized commands to servo pulses and H-bridge duty.

The numbers model a 12-bit, 16-channel PWM driver feeding a steering servo
and a dual H-bridge motor driver. Every rounding step is pinned to
round-half-away-from-zero so duty tables are reproducible bit for bit.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

PWM_RESOLUTION = 4096          # 12-bit counter, duty ticks 0..4095
HBRIDGE_MAX_DUTY = 4095
DEFAULT_MOTOR_CHANNEL = 1


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero (not banker's rounding)."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def _clamp_unit(v: float) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"command must be finite, got {v!r}")
    return min(1.0, max(-1.0, v))


@dataclass(frozen=True)
class ServoConfig:
    pwm_frequency_hz: float = 50.0
    min_pulse_us: float = 1000.0
    center_pulse_us: float = 1500.0
    max_pulse_us: float = 2000.0
    channel: int = 0

    def __post_init__(self):
        if self.pwm_frequency_hz <= 0.0:
            raise ValueError("pwm_frequency_hz must be positive")
        if not self.min_pulse_us < self.center_pulse_us < self.max_pulse_us:
            raise ValueError("pulse widths must satisfy min < center < max")
        if not 0 <= self.channel <= 15:
            raise ValueError("channel must be in 0..15")

    @property
    def period_us(self) -> float:
        return 1e6 / self.pwm_frequency_hz


class HBridgeDirection(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    BRAKE = "brake"


@dataclass(frozen=True)
class HBridgeCommand:
    direction: HBridgeDirection
    duty_ticks: int


@dataclass(frozen=True)
class PwmCommand:
    channel: int
    duty_ticks: int


def steering_to_pulse_us(steering: float, cfg: ServoConfig) -> float:
    """Piecewise-linear servo map, rounded to whole microseconds:
    -1 -> min pulse, 0 -> center, +1 -> max."""
    s = _clamp_unit(steering)
    if s >= 0.0:
        pulse = cfg.center_pulse_us + s * (cfg.max_pulse_us - cfg.center_pulse_us)
    else:
        pulse = cfg.center_pulse_us + s * (cfg.center_pulse_us - cfg.min_pulse_us)
    return float(round_half_away(pulse))


def pulse_to_duty_ticks(pulse_us: float, cfg: ServoConfig) -> int:
    """Convert a pulse width to a 12-bit on-time tick count.

    duty = round(pulse / period * 4096), clamped to 0..4095. With the
    default 50 Hz period: 1500 us -> 307 ticks, 2000 us -> 410 ticks.
    A pulse wider than the period means the config is broken, so that is
    an error, not a clamp.
    """
    if pulse_us < 0.0:
        raise ValueError("pulse_us must be non-negative")
    if pulse_us > cfg.period_us:
        raise ValueError(
            f"pulse {pulse_us} us exceeds the {cfg.period_us} us pwm period")
    ticks = round_half_away(pulse_us / cfg.period_us * PWM_RESOLUTION)
    return min(PWM_RESOLUTION - 1, max(0, ticks))


def throttle_to_hbridge(throttle: float) -> HBridgeCommand:
    """Magnitude to duty, sign to direction; exactly zero means brake."""
    t = _clamp_unit(throttle)
    duty = round_half_away(abs(t) * HBRIDGE_MAX_DUTY)
    if t > 0.0:
        direction = HBridgeDirection.FORWARD
    elif t < 0.0:
        direction = HBridgeDirection.REVERSE
    else:
        direction = HBridgeDirection.BRAKE
    return HBridgeCommand(direction=direction, duty_ticks=duty)


def control_to_bus_writes(steering: float, throttle: float, cfg: ServoConfig,
                          motor_channel: int = DEFAULT_MOTOR_CHANNEL) -> list[PwmCommand]:
    """Full command pair -> ordered PWM writes: servo first, then motor."""
    if motor_channel == cfg.channel:
        raise ValueError(
            f"motor channel {motor_channel} collides with servo channel {cfg.channel}")
    if not 0 <= motor_channel <= 15:
        raise ValueError("motor_channel must be in 0..15")
    servo_ticks = pulse_to_duty_ticks(steering_to_pulse_us(steering, cfg), cfg)
    motor = throttle_to_hbridge(throttle)
    return [
        PwmCommand(channel=cfg.channel, duty_ticks=servo_ticks),
        PwmCommand(channel=motor_channel, duty_ticks=motor.duty_ticks),
    ]


class MockPwmBus:
    """In-memory stand-in for the PWM driver; records writes in order."""

    def __init__(self):
        self.writes: list[PwmCommand] = []

    def write(self, cmd: PwmCommand) -> None:
        if not 0 <= cmd.channel <= 15:
            raise ValueError("channel must be in 0..15")
        if not 0 <= cmd.duty_ticks < PWM_RESOLUTION:
            raise ValueError("duty_ticks out of 12-bit range")
        self.writes.append(cmd)

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, cmd in enumerate(self.writes):
                fh.write(json.dumps(
                    {"seq": i, "channel": cmd.channel, "duty_ticks": cmd.duty_ticks}) + "\n")
