"""Closed-loop inference: camera frame in, steering and throttle out.

Also owns frame preprocessing (resize + normalize), the little overlay
arrow the UI draws, and the fixed-rate simulation loop that produces
trace files for the evaluation harness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .nn.model import ArchitectureSpec, model_predict
from .track import (ArcTracker, CameraFrame, CameraModel, TrackSpec,
                    project_to_centerline, render_camera_frame)
from .vehicle import ControlInput, VehicleParams, VehicleState, step

OVERLAY_MAX_ANGLE_RAD = math.pi / 4  # full steering tilts the arrow 45 deg
OVERLAY_LENGTH_FRACTION = 0.4


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Align-corners bilinear resample of an (h, w, c) float array.

    Endpoints map to endpoints, so corner pixels of the output equal the
    corner pixels of the input exactly.
    """
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img
    ys = np.linspace(0.0, h - 1.0, out_h)
    xs = np.linspace(0.0, w - 1.0, out_w)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def preprocess(frame: CameraFrame, arch: ArchitectureSpec) -> np.ndarray:
    """CameraFrame -> float32 (input_h, input_w, 3) in [0, 1]."""
    img = frame.to_array().astype(np.float32)
    img = bilinear_resize(img, arch.input_height, arch.input_width)
    return (img / np.float32(255.0)).astype(np.float32)


def predict(params: dict, arch: ArchitectureSpec, frame: CameraFrame,
            steering_trim: float = 0.0,
            throttle_scale: float = 1.0) -> ControlInput:
    """Network outputs clamped to [-1, 1], then trimmed and scaled.

    With all-zero parameters this returns steering == steering_trim and
    throttle == 0, which is a handy sanity anchor.
    """
    x = preprocess(frame, arch)[None]
    ps, pt = model_predict(params, arch, x)
    s = min(1.0, max(-1.0, float(ps[0, 0]))) + steering_trim
    t = min(1.0, max(-1.0, float(pt[0, 0]))) * throttle_scale
    return ControlInput(steering=s, throttle=t)


@dataclass(frozen=True)
class MovementVector:
    """Overlay arrow in pixel space: bottom-center origin, tip toward the
    commanded direction, length scaled by |throttle|."""
    origin_px: tuple[int, int]
    endpoint_px: tuple[int, int]


def movement_vector(control: ControlInput, camera: CameraModel) -> MovementVector:
    w, h = camera.width_px, camera.height_px
    origin = (w // 2, h - 1)
    length = OVERLAY_LENGTH_FRACTION * h * abs(control.throttle)
    angle = control.steering * OVERLAY_MAX_ANGLE_RAD
    ex = origin[0] + length * math.sin(angle)
    ey = origin[1] - length * math.cos(angle)
    endpoint = (min(w - 1, max(0, int(round(ex)))),
                min(h - 1, max(0, int(round(ey)))))
    return MovementVector(origin_px=origin, endpoint_px=endpoint)


@dataclass
class EpisodeResult:
    trace: list[dict]
    completed: bool
    steps: int
    final_state: VehicleState


def run_loop(params: dict, arch: ArchitectureSpec, track: TrackSpec,
             vehicle: VehicleParams, camera: CameraModel,
             start_state: VehicleState, rate_hz: float = 20.0,
             max_steps: int = 2000, steering_trim: float = 0.0,
             throttle_scale: float = 1.0, controller=None) -> EpisodeResult:
    """Drive the simulated car with the network at a fixed step rate.

    Each step renders the camera view, predicts a command, advances the
    dynamics by dt = 1/rate_hz, then logs one trace line holding the
    post-step state together with the command that produced it, so the
    lap-closing sample is always the last line. Stops on lap completion,
    on leaving the track by more than a full lane width, or at max_steps.

    `controller` (a (state, frame) -> ControlInput callable) substitutes
    for the network when given, which lets a scripted policy exercise the
    loop plumbing on its own.
    """
    if rate_hz <= 0.0:
        raise ValueError("rate_hz must be positive")
    dt = 1.0 / rate_hz
    if dt > 0.1:
        raise ValueError("rate_hz below 10 Hz breaks the dynamics dt bound")

    state = start_state
    arc0, _ = project_to_centerline(track, (state.x_m, state.y_m))
    tracker = ArcTracker(track, arc0)
    trace: list[dict] = []
    completed = False
    n_steps = 0

    for step_idx in range(max_steps):
        frame = render_camera_frame(track, state, camera)
        if controller is not None:
            control = controller(state, frame)
        else:
            control = predict(params, arch, frame, steering_trim,
                              throttle_scale)
        state = step(state, control, vehicle, dt)
        n_steps += 1
        trace.append({
            "step": step_idx,
            "x": state.x_m, "y": state.y_m,
            "heading": state.heading_rad, "speed": state.speed_mps,
            "steering": control.steering, "throttle": control.throttle,
        })
        arc, offset = project_to_centerline(track, (state.x_m, state.y_m))
        progress = tracker.update(arc)
        if abs(offset) > track.lane_width_m:
            break  # hopelessly off course
        if progress >= track.length_m:
            completed = True
            break

    return EpisodeResult(trace=trace, completed=completed,
                         steps=n_steps, final_state=state)


def write_trace(path, trace: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in trace:
            fh.write(json.dumps(line) + "\n")


def read_trace(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
