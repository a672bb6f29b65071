"""Scripted expert, lap scoring, and synthetic dataset generation.

The expert is a pure-pursuit tracker: aim at the centerline point a fixed
arc ahead, convert the chord curvature to a wheel angle through the
bicycle geometry, and normalize. Throttle is a cruise constant bled off
with commanded curvature so the car slows for the arcs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, asdict
from datetime import datetime, timezone

from .datastore import SessionWriter
from .prng import derive_seed, uniform_at
from .track import (ArcTracker, CameraModel, TrackSpec, point_at_arc,
                    project_to_centerline, render_camera_frame, tangent_at_arc)
from .vehicle import ControlInput, VehicleParams, VehicleState, step

DEFAULT_LOOKAHEAD_M = 0.6
CRUISE_THROTTLE = 0.4
CURVE_SLOWDOWN = 0.20
MIN_THROTTLE = 0.12


log = logging.getLogger(__name__)


class ExpertLostError(RuntimeError):
    """The expert has no sensible command this far off the track."""


def expert_controller(state: VehicleState, track: TrackSpec,
                      params: VehicleParams,
                      lookahead_m: float = DEFAULT_LOOKAHEAD_M) -> ControlInput:
    """Pure-pursuit steering plus curvature-reduced cruise throttle.

    Raises ExpertLostError when the vehicle is more than two lane widths
    from the centerline; there is no demonstration worth recording there.
    """
    arc, offset = project_to_centerline(track, (state.x_m, state.y_m))
    if abs(offset) > 2.0 * track.lane_width_m:
        raise ExpertLostError(
            f"vehicle {abs(offset):.2f} m off centerline, giving up")

    tx, ty = point_at_arc(track, arc + lookahead_m)
    dx = tx - state.x_m
    dy = ty - state.y_m
    ch, sh = math.cos(state.heading_rad), math.sin(state.heading_rad)
    lx = ch * dx + sh * dy        # target in vehicle frame
    ly = -sh * dx + ch * dy
    d2 = lx * lx + ly * ly
    if d2 < 1e-12:
        return ControlInput(steering=0.0, throttle=MIN_THROTTLE)

    kappa = 2.0 * ly / d2  # pure pursuit chord curvature
    wheel = math.atan(params.wheelbase_m * kappa)
    steering = min(1.0, max(-1.0, wheel / params.max_wheel_angle_rad))
    throttle = max(MIN_THROTTLE,
                   CRUISE_THROTTLE * (1.0 - CURVE_SLOWDOWN * abs(steering)))
    return ControlInput(steering=steering, throttle=throttle)


# -- lap scoring ------------------------------------------------------------

@dataclass(frozen=True)
class LapMetrics:
    completed: bool
    lap_time_s: float
    avg_speed_mps: float
    distance_m: float
    offtrack_events: int
    max_lateral_offset_m: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def score_episode(trace: list[dict], track: TrackSpec,
                  dt_s: float = 0.05) -> LapMetrics:
    """Score one trace (list of {step, x, y, ...} dicts).

    Progress is the unwrapped arc length along the centerline. The lap is
    complete at the first sample where cumulative progress reaches the
    track length; off-track events count debounced excursions beyond half
    a lane width.
    """
    if not trace:
        raise ValueError("empty trace")
    if dt_s <= 0.0:
        raise ValueError("dt_s must be positive")

    arc0, off0 = project_to_centerline(track, (trace[0]["x"], trace[0]["y"]))
    tracker = ArcTracker(track, arc0)
    max_off = abs(off0)
    events = 0
    was_off = abs(off0) > track.lane_width_m / 2.0
    if was_off:
        events = 1
    completed = False
    lap_steps = None
    lap_distance = 0.0
    distance = 0.0

    for i, row in enumerate(trace[1:], start=1):
        arc, off = project_to_centerline(track, (row["x"], row["y"]))
        progress = tracker.update(arc)
        distance = progress
        max_off = max(max_off, abs(off))
        is_off = abs(off) > track.lane_width_m / 2.0
        if is_off and not was_off:
            events += 1
        was_off = is_off
        if not completed and progress >= track.length_m:
            completed = True
            lap_steps = i
            lap_distance = progress

    if completed:
        # distance through the lap-closing sample, so that
        # avg_speed_mps * lap_time_s == distance_m holds exactly
        lap_time = lap_steps * dt_s
        avg = lap_distance / lap_time
        return LapMetrics(completed=True, lap_time_s=lap_time,
                          avg_speed_mps=avg, distance_m=lap_distance,
                          offtrack_events=events,
                          max_lateral_offset_m=max_off)

    duration = (len(trace) - 1) * dt_s
    avg = distance / duration if duration > 0 else 0.0
    return LapMetrics(completed=False, lap_time_s=duration,
                      avg_speed_mps=avg, distance_m=distance,
                      offtrack_events=events, max_lateral_offset_m=max_off)


# -- synthetic data ---------------------------------------------------------

def synthesize_dataset(track: TrackSpec, n_samples: int, seed: int,
                       out_dir, noise_level: float = 0.1,
                       vehicle: VehicleParams | None = None,
                       camera: CameraModel | None = None,
                       rate_hz: float = 20.0,
                       track_id: str = "default") -> int:
    """Drive the expert around the track and record a labeled session.

    Episodes start at seed-randomized arc positions on the centerline and
    run until the lap closes or the expert washes out. Steering noise
    (uniform +-noise_level) perturbs only the applied command, pushing the
    car into off-center states, while each frame is labeled with the
    expert's clean output for that state. The labels therefore stay a
    deterministic function of the pose and the trained net sees how to
    steer back, not the wandering that got it there. Exactly n_samples
    records are written; returns the number of episodes used.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if noise_level < 0.0:
        raise ValueError("noise_level must be >= 0")
    vehicle = vehicle or VehicleParams()
    camera = camera or CameraModel()
    dt = 1.0 / rate_hz
    ms_per_step = 1000.0 / rate_hz

    created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    episodes = 0
    written = 0
    with SessionWriter(out_dir, camera.width_px, camera.height_px,
                       rate_hz, track_id, created) as writer:
        while written < n_samples:
            ep_seed = derive_seed(seed, episodes)
            start_arc = uniform_at(ep_seed, 0) * track.length_m
            sx, sy = point_at_arc(track, start_arc)
            state = VehicleState(x_m=sx, y_m=sy,
                                 heading_rad=tangent_at_arc(track, start_arc),
                                 speed_mps=0.0)
            tracker = ArcTracker(track, start_arc)
            episodes += 1
            noise_seed = derive_seed(seed, episodes, 0x5E)

            for ep_step in range(100000):
                if written >= n_samples:
                    break
                try:
                    clean = expert_controller(state, track, vehicle)
                except ExpertLostError:
                    log.info("expert lost the track at step %d of episode %d,"
                             " restarting", ep_step, episodes)
                    break
                noise = (uniform_at(noise_seed, ep_step) * 2.0 - 1.0) * noise_level
                applied = ControlInput(steering=clean.steering + noise,
                                       throttle=clean.throttle)
                frame = render_camera_frame(track, state, camera)
                writer.append(frame.to_array(),
                              clean.steering, clean.throttle,
                              ts_ms=int(round(written * ms_per_step)))
                written += 1
                state = step(state, applied, vehicle, dt)
                arc, _ = project_to_centerline(track, (state.x_m, state.y_m))
                if tracker.update(arc) >= track.length_m:
                    break  # lap closed, start a fresh episode elsewhere
    return episodes
