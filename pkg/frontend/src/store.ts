// Single state store driving every rendered number. The invariant is
// that nothing on screen is fabricated: each field traces to a received
// message or an explicit connection-lifecycle event.

import type {
  AckMsg, ErrorMsg, FrameMsg, Mode, OverlayMsg, Role, ServerMsg, StatusMsg,
  VehicleStateMsg,
} from "./protocol.js";
import type { InputSource } from "./input.js";

export type ConnectionState = "connecting" | "connected" | "reconnecting";

export interface Toast {
  error: string;
  detail: string;
}

export interface UiState {
  connection: ConnectionState;
  retryInMs: number | null;
  role: Role | null;
  mode: Mode;
  recording: boolean;
  recordsWritten: number;
  sessionId: string | null;
  telemetry: VehicleStateMsg | null;
  applied: { steering: number; throttle: number } | null;
  overlay: OverlayMsg | null;
  lastSeq: number | null;
  framesReceived: number;
  framesDropped: number;
  inputSource: InputSource;
  toasts: Toast[];
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    retryInMs: null,
    role: null,
    mode: "human",
    recording: false,
    recordsWritten: 0,
    sessionId: null,
    telemetry: null,
    applied: null,
    overlay: null,
    lastSeq: null,
    framesReceived: 0,
    framesDropped: 0,
    inputSource: "keyboard",
    toasts: [],
  };
}

export type Listener = (state: UiState) => void;

export class Store {
  readonly state = initialState();
  private listeners: Listener[] = [];

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((f) => f !== fn);
    };
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  apply(msg: ServerMsg): void {
    switch (msg.type) {
      case "Status":
        this.onStatus(msg);
        break;
      case "Frame":
        this.onFrame(msg);
        break;
      case "Ack":
        this.onAck(msg);
        break;
      case "Error":
        this.onError(msg);
        break;
    }
    this.notify();
  }

  private onStatus(msg: StatusMsg): void {
    this.state.mode = msg.mode;
    this.state.recording = msg.recording;
    this.state.recordsWritten = msg.records_written;
    this.state.sessionId = msg.session_id;
    if (msg.role !== undefined) this.state.role = msg.role;
  }

  private onFrame(msg: FrameMsg): void {
    const last = this.state.lastSeq;
    if (last !== null && msg.seq > last + 1) {
      this.state.framesDropped += msg.seq - last - 1;
    }
    this.state.lastSeq = msg.seq;
    this.state.framesReceived += 1;
    this.state.telemetry = msg.state;
    this.state.overlay = msg.overlay;
  }

  private onAck(msg: AckMsg): void {
    this.state.applied = { steering: msg.steering, throttle: msg.throttle };
    this.state.telemetry = msg.state;
  }

  private onError(msg: ErrorMsg): void {
    this.state.toasts.push({ error: msg.error, detail: msg.detail });
    if (this.state.toasts.length > 5) this.state.toasts.shift();
  }

  setConnection(conn: ConnectionState, retryInMs: number | null = null): void {
    this.state.connection = conn;
    this.state.retryInMs = retryInMs;
    this.notify();
  }

  setInputSource(source: InputSource): void {
    if (this.state.inputSource !== source) {
      this.state.inputSource = source;
      this.notify();
    }
  }

  dismissToast(index: number): void {
    this.state.toasts.splice(index, 1);
    this.notify();
  }

  /** True when this connection may emit driving Commands. */
  canDrive(): boolean {
    return this.state.connection === "connected" &&
      this.state.role === "driver" && this.state.mode === "human";
  }
}
