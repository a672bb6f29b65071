"""Closed-course geometry and the ground-plane camera renderer.

A track is a closed simple polyline centerline with a constant lane width.
The renderer casts one ray per pixel from a pinhole camera mounted on the
vehicle, intersects it with the ground plane z = 0 and colors the hit by
its distance to the centerline. No meshes, no textures, no GPU.

Conventions (consistent across the whole package):
  * world x/y in meters, heading counter-clockwise from +x,
  * lateral offset sign = cross(point - segment_start, direction): a
    positive steering command turns the heading away from the positive
    side, so a controller corrects +offset with +steering,
  * image right basis is (-sin h, cos h, 0): steering right pans the view
    right.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

LINE_BAND_M = 0.02

TRACK_COLOR = (96, 96, 96)
LINE_COLOR = (255, 255, 255)
OFFTRACK_COLOR = (40, 120, 40)
SKY_COLOR = (150, 200, 255)

DEFAULT_LANE_WIDTH_M = 0.6
DEFAULT_LENGTH_M = 13.0


class TrackFormatError(ValueError):
    """Raised when a track description fails validation."""


@dataclass(frozen=True)
class CameraModel:
    """Forward-looking pinhole camera rigidly mounted on the vehicle."""

    width_px: int = 160
    height_px: int = 120
    hfov_rad: float = math.radians(60.0)
    mount_height_m: float = 0.12
    pitch_down_rad: float = math.radians(15.0)
    forward_offset_m: float = 0.10

    def __post_init__(self):
        if self.width_px < 2 or self.height_px < 2:
            raise ValueError("camera needs at least 2x2 pixels")
        if not 0.0 < self.hfov_rad < math.pi:
            raise ValueError("hfov_rad must be in (0, pi)")
        if self.mount_height_m <= 0.0:
            raise ValueError("mount_height_m must be positive")
        if not 0.0 <= self.pitch_down_rad < math.pi / 2.0:
            raise ValueError("pitch_down_rad must be in [0, pi/2)")

    @property
    def focal_px(self) -> float:
        return (self.width_px / 2.0) / math.tan(self.hfov_rad / 2.0)


@dataclass(frozen=True)
class CameraFrame:
    """Raw RGB8 raster, row-major, top row first."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise ValueError(
                f"pixel buffer is {len(self.pixels)} bytes, expected {expected}")

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _segments_intersect(p, q, r, s) -> bool:
    """Proper intersection test for segments pq and rs (shared endpoints excluded)."""
    d1 = _cross2(q - p, r - p)
    d2 = _cross2(q - p, s - p)
    d3 = _cross2(s - r, p - r)
    d4 = _cross2(s - r, q - r)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


class TrackSpec:
    """Closed centerline polyline with lane width and render colors.

    The closing segment from the last waypoint back to the first is
    implicit; the waypoint list must not repeat it.
    """

    def __init__(self, waypoints, lane_width_m: float = DEFAULT_LANE_WIDTH_M,
                 colors: dict | None = None):
        pts = np.asarray(waypoints, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise TrackFormatError("waypoints must be an (n, 2) array")
        if len(pts) < 4:
            raise TrackFormatError("need at least 4 waypoints")
        if not np.all(np.isfinite(pts)):
            raise TrackFormatError("waypoints must be finite")
        if not lane_width_m > 0.0:
            raise TrackFormatError("lane_width_m must be positive")

        seg_d = np.roll(pts, -1, axis=0) - pts
        seg_len = np.hypot(seg_d[:, 0], seg_d[:, 1])
        if np.any(seg_len < 1e-12):
            raise TrackFormatError("consecutive waypoints must be distinct")

        self.waypoints = pts
        self.lane_width_m = float(lane_width_m)
        defaults = {"track": TRACK_COLOR, "line": LINE_COLOR,
                    "offtrack": OFFTRACK_COLOR, "sky": SKY_COLOR}
        if colors:
            unknown = set(colors) - set(defaults)
            if unknown:
                raise TrackFormatError(f"unknown color keys: {sorted(unknown)}")
            defaults.update({k: tuple(int(c) for c in v) for k, v in colors.items()})
        self.colors = defaults

        self._seg_d = seg_d
        self._seg_len = seg_len
        self._seg_u = seg_d / seg_len[:, None]
        self._cum = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.length_m = float(self._cum[-1])
        self._check_simple()

    def _check_simple(self):
        pts = self.waypoints
        n = len(pts)
        ends = np.roll(pts, -1, axis=0)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # adjacent segments share an endpoint
                if _segments_intersect(pts[i], ends[i], pts[j], ends[j]):
                    raise TrackFormatError(
                        f"centerline self-intersects (segments {i} and {j})")

    # -- geometry queries ---------------------------------------------------

    def project_many(self, points: np.ndarray,
                     origin: np.ndarray | None = None):
        """Vectorized projection of (p, 2) points onto the centerline.

        Returns (arc, offset) arrays. `origin` shifts the waypoints before
        projecting, which keeps the renderer's math relative to the camera.
        """
        a = self.waypoints if origin is None else self.waypoints - origin
        d = self._seg_d
        rel = points[:, None, :] - a[None, :, :]
        t = (rel[..., 0] * d[:, 0] + rel[..., 1] * d[:, 1]) / (self._seg_len ** 2)
        np.clip(t, 0.0, 1.0, out=t)
        px = rel[..., 0] - t * d[:, 0]
        py = rel[..., 1] - t * d[:, 1]
        dist2 = px * px + py * py
        # argmin takes the first minimum, i.e. the smallest arc position
        idx = np.argmin(dist2, axis=1)
        rows = np.arange(len(points))
        t_best = t[rows, idx]
        arc = self._cum[idx] + t_best * self._seg_len[idx]
        arc = np.where(arc >= self.length_m, arc - self.length_m, arc)
        u = self._seg_u[idx]
        rb = rel[rows, idx]
        offset = rb[:, 0] * u[:, 1] - rb[:, 1] * u[:, 0]
        return arc, offset

    def centerline_distance(self, points: np.ndarray,
                            origin: np.ndarray | None = None) -> np.ndarray:
        """Unsigned distance from (p, 2) points to the centerline polyline."""
        a = self.waypoints if origin is None else self.waypoints - origin
        d = self._seg_d
        rel = points[:, None, :] - a[None, :, :]
        t = (rel[..., 0] * d[:, 0] + rel[..., 1] * d[:, 1]) / (self._seg_len ** 2)
        np.clip(t, 0.0, 1.0, out=t)
        px = rel[..., 0] - t * d[:, 0]
        py = rel[..., 1] - t * d[:, 1]
        return np.sqrt(np.min(px * px + py * py, axis=1))


def centerline_length(track: TrackSpec) -> float:
    return track.length_m


def project_to_centerline(track: TrackSpec, point) -> tuple[float, float]:
    """Project a world point onto the centerline.

    Returns (arc_position_m, lateral_offset_m). Arc position lies in
    [0, length); distance ties across segments resolve to the smallest
    arc position.
    """
    p = np.asarray(point, dtype=np.float64).reshape(1, 2)
    arc, off = track.project_many(p)
    return float(arc[0]), float(off[0])


def point_at_arc(track: TrackSpec, arc_m: float) -> tuple[float, float]:
    """Point on the centerline at a given arc position (wraps modulo length)."""
    s = float(arc_m) % track.length_m
    i = int(np.searchsorted(track._cum, s, side="right") - 1)
    i = min(i, len(track.waypoints) - 1)
    t = (s - track._cum[i]) / track._seg_len[i]
    p = track.waypoints[i] + t * track._seg_d[i]
    return float(p[0]), float(p[1])


def tangent_at_arc(track: TrackSpec, arc_m: float) -> float:
    """Heading of the centerline direction at an arc position, radians."""
    s = float(arc_m) % track.length_m
    i = int(np.searchsorted(track._cum, s, side="right") - 1)
    i = min(i, len(track.waypoints) - 1)
    u = track._seg_u[i]
    return math.atan2(u[1], u[0])


def is_on_track(track: TrackSpec, point) -> bool:
    """True when the point lies within half a lane width of the centerline."""
    _, off = project_to_centerline(track, point)
    return abs(off) <= track.lane_width_m / 2.0


class ArcTracker:
    """Unwraps arc positions into monotonic-in-time lap progress.

    Consecutive samples are assumed to move less than half a lap, so a
    jump beyond length/2 is treated as a start-line crossing.
    """

    def __init__(self, track: TrackSpec, start_arc_m: float):
        self._length = track.length_m
        self._last = float(start_arc_m)
        self.progress_m = 0.0

    def update(self, arc_m: float) -> float:
        delta = float(arc_m) - self._last
        half = self._length / 2.0
        if delta < -half:
            delta += self._length
        elif delta > half:
            delta -= self._length
        self.progress_m += delta
        self._last = float(arc_m)
        return self.progress_m


def default_track(lane_width_m: float = DEFAULT_LANE_WIDTH_M,
                  length_m: float = DEFAULT_LENGTH_M,
                  arc_segments: int = 20) -> TrackSpec:
    """Stadium oval: two straights joined by semicircular arcs of radius 1 m.

    The straight length is solved so the polyline (chordal) length equals
    length_m exactly; with the default 13 m that is the course the whole
    stack is tuned around.
    """
    r = 1.0
    chord_total = 2.0 * arc_segments * r * math.sin(math.pi / (2 * arc_segments))
    straight = (length_m - 2.0 * chord_total) / 2.0
    if straight <= 0.0:
        raise TrackFormatError("length_m too short for the arc radius")

    pts = [(0.0, 0.0), (straight, 0.0)]
    for k in range(1, arc_segments):  # right arc, CCW from -pi/2 to pi/2
        ang = -math.pi / 2.0 + math.pi * k / arc_segments
        pts.append((straight + r * math.cos(ang), r + r * math.sin(ang)))
    pts.append((straight, 2.0 * r))
    pts.append((0.0, 2.0 * r))
    for k in range(1, arc_segments):  # left arc, CCW from pi/2 to 3 pi/2
        ang = math.pi / 2.0 + math.pi * k / arc_segments
        pts.append((r * math.cos(ang), r + r * math.sin(ang)))
    return TrackSpec(pts, lane_width_m=lane_width_m)


# -- serialization ----------------------------------------------------------

def track_to_json(track: TrackSpec) -> str:
    return json.dumps({
        "lane_width_m": track.lane_width_m,
        "waypoints": track.waypoints.tolist(),
        "colors": {k: list(v) for k, v in track.colors.items()},
    }, indent=2)


def track_from_json(text: str) -> TrackSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TrackFormatError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise TrackFormatError("track document must be a JSON object")
    unknown = set(doc) - {"lane_width_m", "waypoints", "colors"}
    if unknown:
        raise TrackFormatError(f"unknown track keys: {sorted(unknown)}")
    try:
        return TrackSpec(doc["waypoints"], lane_width_m=doc["lane_width_m"],
                         colors=doc.get("colors"))
    except KeyError as e:
        raise TrackFormatError(f"missing track key: {e}") from None


def load_track(path) -> TrackSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return track_from_json(fh.read())


def save_track(track: TrackSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(track_to_json(track) + "\n")


# -- renderer ---------------------------------------------------------------

def render_camera_frame(track: TrackSpec, state, camera: CameraModel) -> CameraFrame:
    """Render the RGB view from the vehicle-mounted camera.

    One ground-plane ray cast per pixel; rays with no downward component
    render sky. All math is relative to the vehicle position, so the frame
    depends only on the pose of the vehicle relative to the track.
    """
    W, H = camera.width_px, camera.height_px
    theta = state.heading_rad
    alpha = camera.pitch_down_rad
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)

    fwd = np.array([ct * ca, st * ca, -sa])
    right = np.array([-st, ct, 0.0])
    down = np.array([-sa * ct, -sa * st, -ca])
    cam = np.array([ct * camera.forward_offset_m,
                    st * camera.forward_offset_m,
                    camera.mount_height_m])

    f = camera.focal_px
    x_im = (np.arange(W, dtype=np.float64) + 0.5 - W / 2.0) / f
    y_im = (np.arange(H, dtype=np.float64) + 0.5 - H / 2.0) / f

    d = (fwd[None, None, :]
         + x_im[None, :, None] * right[None, None, :]
         + y_im[:, None, None] * down[None, None, :])
    dz = d[..., 2]
    ground = dz < 0.0

    img = np.empty((H, W, 3), dtype=np.uint8)
    img[:] = track.colors["sky"]

    if np.any(ground):
        t = -cam[2] / dz[ground]
        gx = cam[0] + t * d[..., 0][ground]
        gy = cam[1] + t * d[..., 1][ground]
        pts = np.stack([gx, gy], axis=1)
        origin = np.array([state.x_m, state.y_m])
        dist = track.centerline_distance(pts, origin=origin)

        half = track.lane_width_m / 2.0
        colors = np.empty((len(pts), 3), dtype=np.uint8)
        colors[:] = track.colors["offtrack"]
        on_lane = dist <= half
        colors[on_lane] = track.colors["line"]
        colors[dist <= half - LINE_BAND_M] = track.colors["track"]
        img[ground] = colors

    return CameraFrame(width=W, height=H, pixels=img.tobytes())
