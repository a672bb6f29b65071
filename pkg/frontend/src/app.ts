// Browser wiring: the only file that touches the DOM, sockets, timers,
// and gamepads. Everything it glues together is testable without it.

import { MonitorClient } from "./client.js";
import type { SocketLike } from "./client.js";
import { CommandEmitter, TICK_MS } from "./commandLoop.js";
import { InputRig } from "./input.js";
import { arrowFromOverlay, drawArrow } from "./overlay.js";
import type { StrokeSink } from "./overlay.js";
import { decodeBase64Ppm } from "./ppm.js";
import type { DecodedFrame } from "./ppm.js";
import type { FrameMsg } from "./protocol.js";
import { Store } from "./store.js";

const SCALE = 3;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function wrapWebSocket(url: string, protocols: string[]): SocketLike {
  const ws = new WebSocket(url, protocols);
  const wrapped: SocketLike = {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
  };
  ws.onopen = () => wrapped.onopen?.();
  ws.onmessage = (ev) => {
    if (typeof ev.data === "string") wrapped.onmessage?.(ev.data);
  };
  ws.onclose = () => wrapped.onclose?.();
  ws.onerror = () => ws.close();
  return wrapped;
}

function serverUrl(): string {
  const override = new URLSearchParams(location.search).get("server");
  if (override !== null) return override;
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/ws`;
}

class CanvasView {
  private readonly display: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private readonly backing = document.createElement("canvas");
  private readonly backingCtx: CanvasRenderingContext2D;
  private pending: { frame: DecodedFrame; msg: FrameMsg } | null = null;
  private rafQueued = false;
  private lastDrawnSeq = -1;
  updates = 0;

  constructor() {
    this.display = el<HTMLCanvasElement>("camera");
    const ctx = this.display.getContext("2d");
    const bctx = this.backing.getContext("2d");
    if (ctx === null || bctx === null) throw new Error("no 2d context");
    this.ctx = ctx;
    this.backingCtx = bctx;
  }

  present(frame: DecodedFrame, msg: FrameMsg): void {
    if (msg.seq <= this.lastDrawnSeq) return; // stale decode
    this.pending = { frame, msg };
    if (!this.rafQueued) {
      this.rafQueued = true;
      requestAnimationFrame(() => this.paint());
    }
  }

  private paint(): void {
    this.rafQueued = false;
    if (this.pending === null) return;
    const { frame, msg } = this.pending;
    this.pending = null;
    this.lastDrawnSeq = msg.seq;

    if (this.backing.width !== frame.width ||
        this.backing.height !== frame.height) {
      this.backing.width = frame.width;
      this.backing.height = frame.height;
      this.display.width = frame.width * SCALE;
      this.display.height = frame.height * SCALE;
    }
    this.backingCtx.putImageData(
      new ImageData(frame.rgba, frame.width, frame.height), 0, 0);
    this.ctx.imageSmoothingEnabled = false;
    this.ctx.drawImage(this.backing, 0, 0,
      frame.width * SCALE, frame.height * SCALE);

    this.ctx.save();
    this.ctx.scale(SCALE, SCALE);
    this.ctx.strokeStyle = "#2ee66b";
    this.ctx.fillStyle = "#2ee66b";
    this.ctx.lineWidth = 1.2 / SCALE * 2;
    const sink: StrokeSink = {
      line: (x1, y1, x2, y2) => {
        this.ctx.beginPath();
        this.ctx.moveTo(x1, y1);
        this.ctx.lineTo(x2, y2);
        this.ctx.stroke();
      },
      dot: (x, y) => {
        this.ctx.beginPath();
        this.ctx.arc(x, y, 1.5, 0, 2 * Math.PI);
        this.ctx.fill();
      },
    };
    drawArrow(arrowFromOverlay(msg.overlay), sink);
    this.ctx.restore();
    this.updates += 1;
  }
}

function startDecoder(view: CanvasView): (msg: FrameMsg) => void {
  let worker: Worker | null = null;
  try {
    worker = new Worker(new URL("./decodeWorker.js", import.meta.url),
      { type: "module" });
  } catch {
    worker = null;
  }
  if (worker === null) {
    return (msg) => view.present(decodeBase64Ppm(msg.jpeg_or_ppm), msg);
  }
  const inFlight = new Map<number, FrameMsg>();
  worker.onmessage = (ev) => {
    const { seq, width, height, rgba } = ev.data as {
      seq: number; width: number; height: number; rgba: Uint8ClampedArray;
    };
    const msg = inFlight.get(seq);
    inFlight.delete(seq);
    if (msg !== undefined) view.present({ width, height, rgba }, msg);
  };
  return (msg) => {
    inFlight.set(msg.seq, msg);
    if (inFlight.size > 4) { // stream outran the decoder; shed oldest
      const oldest = Math.min(...inFlight.keys());
      inFlight.delete(oldest);
    }
    worker.postMessage({ seq: msg.seq, b64: msg.jpeg_or_ppm });
  };
}

function main(): void {
  const store = new Store();
  const view = new CanvasView();
  const onFrame = startDecoder(view);
  const client = new MonitorClient(serverUrl(), store, {
    makeSocket: wrapWebSocket,
    setTimer: (fn, ms) => window.setTimeout(fn, ms),
    clearTimer: (h) => window.clearTimeout(h as number),
  }, { onFrame });

  const rig = new InputRig();
  const emitter = new CommandEmitter();

  window.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    if (ev.code === "KeyR") {
      if (store.state.role === "driver") {
        client.send({ type: "RecordToggle", on: !store.state.recording });
      }
      return;
    }
    if (ev.code === "KeyM") {
      toggleMode();
      return;
    }
    if (store.canDrive() && rig.keyboard.keyDown(ev.code)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => {
    if (rig.keyboard.keyUp(ev.code)) ev.preventDefault();
  });
  window.addEventListener("blur", () => rig.keyboard.releaseAll());

  function toggleMode(): void {
    if (store.state.role !== "driver") return;
    const next = store.state.mode === "human" ? "autopilot" : "human";
    client.send({ type: "ModeSwitch", mode: next });
  }

  el<HTMLButtonElement>("record-btn").addEventListener("click", () => {
    client.send({ type: "RecordToggle", on: !store.state.recording });
  });
  el<HTMLButtonElement>("mode-btn").addEventListener("click", toggleMode);

  function pollGamepad(): void {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    const pad = Array.from(pads).find((p) => p !== null) ?? null;
    rig.setGamepad(pad === null ? null : {
      leftStickX: pad.axes[0] ?? 0,
      rightTrigger: pad.buttons[7]?.value ?? 0,
      leftTrigger: pad.buttons[6]?.value ?? 0,
    });
    store.setInputSource(rig.source());
  }

  window.setInterval(() => {
    pollGamepad();
    const axes = rig.step(TICK_MS / 1000);
    const cmd = emitter.next(axes, store.canDrive());
    if (cmd !== null) client.send(cmd);
  }, TICK_MS);

  const banner = el<HTMLDivElement>("banner");
  const speedEl = el<HTMLSpanElement>("speed");
  const steerBar = el<HTMLDivElement>("steer-bar");
  const throttleBar = el<HTMLDivElement>("throttle-bar");
  const modeEl = el<HTMLSpanElement>("mode");
  const recordsEl = el<HTMLSpanElement>("records");
  const recDot = el<HTMLSpanElement>("rec-dot");
  const droppedEl = el<HTMLSpanElement>("dropped");
  const sessionEl = el<HTMLSpanElement>("session");
  const sourceEl = el<HTMLSpanElement>("source");
  const roleEl = el<HTMLSpanElement>("role");
  const toastsEl = el<HTMLDivElement>("toasts");
  const recordBtn = el<HTMLButtonElement>("record-btn");
  const modeBtn = el<HTMLButtonElement>("mode-btn");

  store.subscribe((s) => {
    if (s.connection === "connected") {
      banner.hidden = true;
    } else {
      banner.hidden = false;
      banner.textContent = s.connection === "connecting"
        ? "connecting…"
        : `connection lost, retrying in ${((s.retryInMs ?? 0) / 1000).toFixed(1)} s`;
    }
    const t = s.telemetry;
    speedEl.textContent = t === null ? "–" : t.speed.toFixed(2);
    const applied = s.applied ?? { steering: 0, throttle: 0 };
    steerBar.style.left = `${50 + 50 * Math.min(1, Math.max(-1, applied.steering)) / 2}%`;
    throttleBar.style.height = `${Math.abs(applied.throttle) * 100}%`;
    throttleBar.classList.toggle("reverse", applied.throttle < 0);
    modeEl.textContent = s.mode;
    recordsEl.textContent = String(s.recordsWritten);
    recDot.classList.toggle("on", s.recording);
    droppedEl.textContent = String(s.framesDropped);
    sessionEl.textContent = s.sessionId ?? "–";
    sourceEl.textContent = s.inputSource;
    roleEl.textContent = s.role ?? "–";
    recordBtn.textContent = s.recording ? "stop recording (R)" : "record (R)";
    recordBtn.disabled = s.role !== "driver";
    modeBtn.textContent = s.mode === "human"
      ? "engage autopilot (M)" : "take over (M)";
    modeBtn.disabled = s.role !== "driver";
    toastsEl.replaceChildren(...s.toasts.map((toast, i) => {
      const div = document.createElement("div");
      div.className = "toast";
      div.textContent = `${toast.error}: ${toast.detail}`;
      div.addEventListener("click", () => store.dismissToast(i));
      return div;
    }));
  });

  client.connect();
}

main();
