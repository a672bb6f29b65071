"""WebSocket bridge between the simulator and the browser cockpit.

One paced task owns the world and steps it at the loop rate; connection
handlers talk to it only through queues and futures. Frames fan out
through per-connection drop-oldest queues (depth 2) so a stalled client
can never hold up the simulation. All messages are JSON text with a
"type" field; the subprotocol name is the wire-format version.
"""

from __future__ import annotations

import asyncio
import base64
import json
import math
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import FileResponse, HTMLResponse, PlainTextResponse
from starlette.staticfiles import StaticFiles
from starlette.websockets import WebSocket, WebSocketDisconnect

from .autopilot import movement_vector, predict
from .config import PilotConfig
from .datastore import SessionWriter, encode_ppm
from .track import (CameraModel, TrackSpec, point_at_arc,
                    render_camera_frame, tangent_at_arc)
from .vehicle import ControlInput, VehicleParams, VehicleState, step

SUBPROTOCOL = "pilotstack.v1"
MODE_HUMAN = "human"
MODE_AUTOPILOT = "autopilot"
ROLE_DRIVER = "driver"
ROLE_OBSERVER = "observer"
FRAME_QUEUE_DEPTH = 2
WS_PROTOCOL_ERROR = 1002
ACK_TIMEOUT_S = 2.0


class TeleopError(RuntimeError):
    """Recoverable command rejection; `kind` is "role", "mode" or "state"."""

    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind
        self.detail = detail


@dataclass
class StepEvent:
    """What one simulation step produced, ready for fan-out."""

    seq: int
    frame_msg: dict
    status_changed: bool
    snapshot: dict


class TeleopSim:
    """Synchronous simulation context for the teleop service.

    Owns vehicle state, the current command, the drive mode and the
    recording session. `step_once` advances exactly one fixed-dt tick;
    pacing against the wall clock is the caller's job.
    """

    def __init__(self, track: TrackSpec, vehicle: VehicleParams,
                 camera: CameraModel, pilot: PilotConfig,
                 sessions_dir, model: tuple | None = None,
                 track_id: str = "default",
                 start_state: VehicleState | None = None):
        self.track = track
        self.vehicle = vehicle
        self.camera = camera
        self.pilot = pilot
        self.sessions_dir = os.fspath(sessions_dir)
        self.track_id = track_id
        self._model = model  # (params, arch) or None
        self.mode = MODE_AUTOPILOT if model is not None else MODE_HUMAN
        if start_state is None:
            sx, sy = point_at_arc(track, 0.0)
            start_state = VehicleState(x_m=sx, y_m=sy,
                                       heading_rad=tangent_at_arc(track, 0.0),
                                       speed_mps=0.0)
        self.state = start_state
        self._command = ControlInput(steering=0.0, throttle=0.0)
        self._seq = 0
        self._writer: SessionWriter | None = None
        self.session_id: str | None = None
        self.records_written = 0
        self._record_step = 0
        self._session_counter = 0
        self._status_dirty = False

    @property
    def rate_hz(self) -> float:
        return self.pilot.loop_rate_hz

    @property
    def dt_s(self) -> float:
        return 1.0 / self.pilot.loop_rate_hz

    @property
    def recording(self) -> bool:
        return self._writer is not None

    @property
    def has_model(self) -> bool:
        return self._model is not None

    def set_command(self, steering: float, throttle: float) -> ControlInput:
        """Clamp and store as the current input (last writer wins)."""
        if self.mode != MODE_HUMAN:
            raise TeleopError("mode", "commands are ignored in autopilot mode")
        self._command = ControlInput(steering=steering, throttle=throttle)
        return self._command

    def apply_command(self, steering: float, throttle: float):
        """Store the command, run the step it lands in, return (applied,
        post-step snapshot). Headless counterpart of the service path,
        where the paced loop performs the step instead."""
        applied = self.set_command(steering, throttle)
        self.step_once()
        return applied, self.state_snapshot()

    def set_mode(self, mode: str) -> None:
        if mode not in (MODE_HUMAN, MODE_AUTOPILOT):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == MODE_AUTOPILOT and self._model is None:
            raise TeleopError("mode", "no autopilot model loaded")
        if mode != self.mode:
            self.mode = mode
            # stale human commands must not resume when control returns
            self._command = ControlInput(steering=0.0, throttle=0.0)
            self._status_dirty = True

    def set_recording(self, on: bool) -> None:
        if on == self.recording:
            return
        if on:
            while True:
                sid = f"session_{self._session_counter:03d}"
                self._session_counter += 1
                session_dir = os.path.join(self.sessions_dir, sid)
                if not os.path.exists(session_dir):
                    break
            created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            self._writer = SessionWriter(
                session_dir, self.camera.width_px, self.camera.height_px,
                self.rate_hz, self.track_id, created)
            self.session_id = sid
            self.records_written = 0
            self._record_step = 0
        else:
            self._writer.close()
            self._writer = None
        self._status_dirty = True

    def status_dict(self) -> dict:
        return {"type": "Status", "recording": self.recording,
                "mode": self.mode, "session_id": self.session_id,
                "records_written": self.records_written}

    def state_snapshot(self) -> dict:
        s = self.state
        return {"x": s.x_m, "y": s.y_m, "heading": s.heading_rad,
                "speed": s.speed_mps}

    def step_once(self) -> StepEvent:
        """Render, pick the control, record if on, integrate one tick."""
        frame = render_camera_frame(self.track, self.state, self.camera)
        if self.mode == MODE_AUTOPILOT:
            params, arch = self._model
            control = predict(params, arch, frame,
                              steering_trim=self.pilot.steering_trim,
                              throttle_scale=self.pilot.throttle_scale)
        else:
            control = self._command
        arrow = movement_vector(control, self.camera)
        if self._writer is not None:
            ts = int(round(self._record_step * 1000.0 / self.rate_hz))
            self._writer.append(frame.to_array(), control.steering,
                                control.throttle, ts_ms=ts)
            self._record_step += 1
            self.records_written += 1
            self._status_dirty = True

        pre_step = self.state_snapshot()
        self.state = step(self.state, control, self.vehicle, self.dt_s)
        self._seq += 1
        frame_msg = {
            "type": "Frame",
            "seq": self._seq,
            "width": frame.width,
            "height": frame.height,
            "jpeg_or_ppm": base64.b64encode(
                encode_ppm(frame.to_array())).decode("ascii"),
            "state": pre_step,
            "overlay": {"origin_px": list(arrow.origin_px),
                        "endpoint_px": list(arrow.endpoint_px)},
        }
        changed, self._status_dirty = self._status_dirty, False
        return StepEvent(seq=self._seq, frame_msg=frame_msg,
                         status_changed=changed,
                         snapshot=self.state_snapshot())

    def close(self) -> None:
        if self.recording:
            self.set_recording(False)


# -- service ----------------------------------------------------------------

@dataclass
class _Conn:
    ws: WebSocket
    role: str
    queue: asyncio.Queue = field(default_factory=lambda:
                                 asyncio.Queue(maxsize=FRAME_QUEUE_DEPTH))
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    sender: asyncio.Task | None = None


def _offer(queue: asyncio.Queue, text: str) -> None:
    """Drop-oldest put; never blocks."""
    while True:
        try:
            queue.put_nowait(text)
            return
        except asyncio.QueueFull:
            try:
                queue.get_nowait()
            except asyncio.QueueEmpty:
                continue


async def _sender_loop(conn: _Conn) -> None:
    while True:
        text = await conn.queue.get()
        try:
            async with conn.lock:
                await conn.ws.send_text(text)
        except Exception:
            return  # receive loop observes the disconnect


def _require_number(msg: dict, key: str) -> float:
    v = msg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{key} must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"{key} must be finite")
    return v


class TeleopServer:
    """Connection registry plus the paced stepping task."""

    def __init__(self, sim: TeleopSim):
        self.sim = sim
        self.conns: list[_Conn] = []
        self._acks: list[asyncio.Future] = []
        self.steps = 0

    # -- connection management

    def attach(self, ws: WebSocket) -> _Conn:
        role = ROLE_DRIVER if not any(
            c.role == ROLE_DRIVER for c in self.conns) else ROLE_OBSERVER
        conn = _Conn(ws=ws, role=role)
        self.conns.append(conn)
        return conn

    async def detach(self, conn: _Conn) -> None:
        if conn in self.conns:
            self.conns.remove(conn)
        if conn.sender is not None:
            conn.sender.cancel()
        if conn.role == ROLE_DRIVER and self.conns:
            heir = self.conns[0]
            heir.role = ROLE_DRIVER
            await self._send_direct(heir, self._status_text(heir))

    def _status_text(self, conn: _Conn) -> str:
        status = self.sim.status_dict()
        status["role"] = conn.role
        return json.dumps(status)

    async def _send_direct(self, conn: _Conn, text: str) -> None:
        try:
            async with conn.lock:
                await conn.ws.send_text(text)
        except Exception:
            pass

    # -- stepping

    def publish(self, event: StepEvent) -> None:
        frame_text = json.dumps(event.frame_msg)
        for conn in self.conns:
            _offer(conn.queue, frame_text)
            if event.status_changed:
                _offer(conn.queue, self._status_text(conn))
        acks, self._acks = self._acks, []
        for fut in acks:
            if not fut.done():
                fut.set_result(event.snapshot)

    async def run(self) -> None:
        """Step at the loop rate until cancelled. Overruns skip ticks
        rather than accumulating a backlog."""
        loop = asyncio.get_running_loop()
        period = 1.0 / self.sim.rate_hz
        next_t = loop.time() + period
        while True:
            event = self.sim.step_once()
            self.steps += 1
            self.publish(event)
            delay = next_t - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            next_t = max(next_t + period, loop.time())

    # -- message handling; returns a reason string to close the socket

    async def handle(self, conn: _Conn, raw: str) -> str | None:
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict):
                raise ValueError("message must be an object")
            mtype = msg.get("type")
            if mtype == "Command":
                await self._on_command(conn, msg)
            elif mtype == "RecordToggle":
                self._on_record_toggle(conn, msg)
                await self._send_direct(conn, self._status_text(conn))
            elif mtype == "ModeSwitch":
                self._on_mode_switch(conn, msg)
                await self._send_direct(conn, self._status_text(conn))
            else:
                raise ValueError(f"unknown message type {mtype!r}")
        except TeleopError as exc:
            await self._send_direct(conn, json.dumps(
                {"type": "Error", "error": exc.kind, "detail": exc.detail}))
        except (ValueError, TypeError, KeyError) as exc:
            return str(exc)
        return None

    def _require_driver(self, conn: _Conn) -> None:
        if conn.role != ROLE_DRIVER:
            raise TeleopError("role", "only the driver connection may do that")

    async def _on_command(self, conn: _Conn, msg: dict) -> None:
        steering = _require_number(msg, "steering")
        throttle = _require_number(msg, "throttle")
        self._require_driver(conn)
        applied = self.sim.set_command(steering, throttle)
        fut = asyncio.get_running_loop().create_future()
        self._acks.append(fut)
        try:
            snapshot = await asyncio.wait_for(fut, timeout=ACK_TIMEOUT_S)
        except asyncio.TimeoutError:
            # paced loop stalled; ack with the current state instead
            snapshot = self.sim.state_snapshot()
        await self._send_direct(conn, json.dumps(
            {"type": "Ack", "steering": applied.steering,
             "throttle": applied.throttle, "state": snapshot}))

    def _on_record_toggle(self, conn: _Conn, msg: dict) -> None:
        on = msg.get("on")
        if not isinstance(on, bool):
            raise ValueError("RecordToggle.on must be a boolean")
        self._require_driver(conn)
        self.sim.set_recording(on)

    def _on_mode_switch(self, conn: _Conn, msg: dict) -> None:
        mode = msg.get("mode")
        if mode not in (MODE_HUMAN, MODE_AUTOPILOT):
            raise ValueError("ModeSwitch.mode must be 'human' or 'autopilot'")
        self._require_driver(conn)
        self.sim.set_mode(mode)


_FALLBACK_PAGE = """<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>pilotstack</title>
<style>body{font-family:monospace;background:#111;color:#ddd;text-align:center}
canvas{image-rendering:pixelated;width:480px;border:1px solid #444}</style>
</head><body>
<h3>pilotstack teleop (fallback viewer)</h3>
<p>Read-only view. Build the cockpit UI for driving controls.</p>
<canvas id="cam" width="160" height="120"></canvas>
<pre id="status">connecting...</pre>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`, ["pilotstack.v1"]);
const ctx = document.getElementById("cam").getContext("2d");
const statusEl = document.getElementById("status");
ws.onmessage = (ev) => {
  const m = JSON.parse(ev.data);
  if (m.type === "Status") { statusEl.textContent = JSON.stringify(m); return; }
  if (m.type !== "Frame") return;
  const bytes = Uint8Array.from(atob(m.jpeg_or_ppm), c => c.charCodeAt(0));
  let p = 0, fields = [];              // P6 header: magic, w, h, maxval
  while (fields.length < 4) {
    let tok = "";
    while (p < bytes.length && !/\\s/.test(String.fromCharCode(bytes[p]))) {
      tok += String.fromCharCode(bytes[p++]);
    }
    if (tok.length && tok[0] !== "#") fields.push(tok);
    else if (tok[0] === "#") while (bytes[p] !== 10) p++;
    p++;
  }
  const w = +fields[1], h = +fields[2];
  const img = ctx.createImageData(w, h);
  for (let i = 0, j = p; i < w * h; i++, j += 3) {
    img.data[4*i] = bytes[j]; img.data[4*i+1] = bytes[j+1];
    img.data[4*i+2] = bytes[j+2]; img.data[4*i+3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  statusEl.textContent = `seq ${m.seq}  speed ${m.state.speed.toFixed(2)} m/s`;
};
ws.onclose = () => { statusEl.textContent = "disconnected"; };
</script></body></html>
"""


def create_app(sim: TeleopSim, ui_dir=None) -> FastAPI:
    server = TeleopServer(sim)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(server.run())
        try:
            yield
        finally:
            task.cancel()
            try:
                await task
            except asyncio.CancelledError:
                pass
            sim.close()

    app = FastAPI(lifespan=lifespan)
    app.state.server = server
    index_path = Path(ui_dir) / "index.html" if ui_dir else None

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.get("/")
    async def index():
        if index_path is not None and index_path.is_file():
            return FileResponse(index_path)
        return HTMLResponse(_FALLBACK_PAGE)

    if index_path is not None and index_path.parent.is_dir():
        app.mount("/assets", StaticFiles(directory=index_path.parent),
                  name="assets")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        offered = ws.scope.get("subprotocols") or []
        if SUBPROTOCOL not in offered:
            await ws.accept()
            await ws.close(code=WS_PROTOCOL_ERROR,
                           reason=f"subprotocol {SUBPROTOCOL} required")
            return
        await ws.accept(subprotocol=SUBPROTOCOL)
        conn = server.attach(ws)
        try:
            # Status first, then the frame stream begins
            await server._send_direct(conn, server._status_text(conn))
            conn.sender = asyncio.create_task(_sender_loop(conn))
            while True:
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    break
                reason = await server.handle(conn, raw)
                if reason is not None:
                    await ws.close(code=WS_PROTOCOL_ERROR, reason=reason)
                    break
        finally:
            await server.detach(conn)

    return app


def serve(sim: TeleopSim, host: str = "127.0.0.1", port: int = 8321,
          ui_dir=None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(sim, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
