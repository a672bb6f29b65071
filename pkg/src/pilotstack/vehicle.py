"""Kinematic bicycle model for a small Ackermann-steered car.

Pure value types and pure functions; integration is explicit Euler at a
fixed caller-supplied dt. Position advances with the current speed, then
the speed relaxes toward throttle * max speed through a first-order lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

MAX_STEP_DT_S = 0.1
STRAIGHT_ANGLE_EPS = 1e-9

# Competition size limits for the small-car class, millimetres, inclusive.
FIRA_MAX_LENGTH_MM = 300.0
FIRA_MAX_WIDTH_MM = 200.0
FIRA_MAX_HEIGHT_MM = 300.0


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    w = math.remainder(theta, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def _require_finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class VehicleParams:
    """Geometry and actuation limits of the car."""

    wheelbase_m: float = 0.20
    max_wheel_angle_rad: float = math.radians(30.0)
    max_speed_mps: float = 3.0
    motor_time_constant_s: float = 0.5
    length_mm: float = 300.0
    width_mm: float = 200.0
    height_mm: float = 300.0
    mass_kg: float = 1.15

    def __post_init__(self):
        for name in ("wheelbase_m", "max_wheel_angle_rad", "max_speed_mps",
                     "motor_time_constant_s", "length_mm", "width_mm",
                     "height_mm", "mass_kg"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.max_wheel_angle_rad >= math.pi / 2:
            raise ValueError("max_wheel_angle_rad must be below pi/2")


@dataclass(frozen=True)
class VehicleState:
    """Planar pose plus longitudinal speed. Heading is wrapped on construction."""

    x_m: float = 0.0
    y_m: float = 0.0
    heading_rad: float = 0.0
    speed_mps: float = 0.0

    def __post_init__(self):
        for name in ("x_m", "y_m", "heading_rad", "speed_mps"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "heading_rad", wrap_angle(self.heading_rad))


@dataclass(frozen=True)
class ControlInput:
    """Normalized command pair; both fields are clamped to [-1, 1] on construction."""

    steering: float = 0.0
    throttle: float = 0.0

    def __post_init__(self):
        for name in ("steering", "throttle"):
            v = _require_finite(name, getattr(self, name))
            object.__setattr__(self, name, min(1.0, max(-1.0, v)))


def steering_to_wheel_angle(steering: float, params: VehicleParams) -> float:
    """Map a normalized steering command to a front wheel angle in radians.

    Linear and odd: -1 and +1 reach the +-max_wheel_angle_rad stops.
    """
    s = min(1.0, max(-1.0, _require_finite("steering", steering)))
    return s * params.max_wheel_angle_rad


def turning_radius(wheel_angle_rad: float, params: VehicleParams) -> float | None:
    """Turn radius R = wheelbase / tan(angle), or None when effectively straight."""
    a = _require_finite("wheel_angle_rad", wheel_angle_rad)
    if abs(a) < STRAIGHT_ANGLE_EPS:
        return None
    return params.wheelbase_m / math.tan(a)


def step(state: VehicleState, control: ControlInput, params: VehicleParams,
         dt_s: float) -> VehicleState:
    """Advance the state by one Euler step of dt_s seconds.

    dt_s must lie in (0, 0.1]; larger steps would let the heading update
    outrun the model's validity.
    """
    dt = _require_finite("dt_s", dt_s)
    if not 0.0 < dt <= MAX_STEP_DT_S:
        raise ValueError(f"dt_s must be in (0, {MAX_STEP_DT_S}], got {dt}")

    delta = steering_to_wheel_angle(control.steering, params)
    v = state.speed_mps
    x = state.x_m + v * math.cos(state.heading_rad) * dt
    y = state.y_m + v * math.sin(state.heading_rad) * dt
    heading = wrap_angle(state.heading_rad
                         + v / params.wheelbase_m * math.tan(delta) * dt)

    target = control.throttle * params.max_speed_mps
    # alpha capped at 1 so a huge dt/tau still cannot overshoot the target
    alpha = min(dt / params.motor_time_constant_s, 1.0)
    speed = v + (target - v) * alpha

    return replace(state, x_m=x, y_m=y, heading_rad=heading, speed_mps=speed)


@dataclass(frozen=True)
class FiraReport:
    passed: bool
    violations: tuple[str, ...]


def check_fira_constraints(params: VehicleParams) -> FiraReport:
    """Check the body envelope against the class size limits (inclusive)."""
    violations = []
    for name, value, limit in (
        ("length", params.length_mm, FIRA_MAX_LENGTH_MM),
        ("width", params.width_mm, FIRA_MAX_WIDTH_MM),
        ("height", params.height_mm, FIRA_MAX_HEIGHT_MM),
    ):
        if value > limit:
            violations.append(f"{name} {value:g} mm exceeds limit {limit:g} mm")
    return FiraReport(passed=not violations, violations=tuple(violations))
