// WebSocket session with automatic reconnect. The socket constructor and
// timer functions are injected so the whole lifecycle runs under test
// without a network or a real clock.

import { parseServerMsg, SUBPROTOCOL } from "./protocol.js";
import type { ClientMsg, FrameMsg } from "./protocol.js";
import type { Store } from "./store.js";

export const INITIAL_RETRY_MS = 500;
export const MAX_RETRY_MS = 8000;

export interface SocketLike {
  send(text: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((text: string) => void) | null;
  onclose: (() => void) | null;
}

export interface ClientDeps {
  makeSocket(url: string, protocols: string[]): SocketLike;
  setTimer(fn: () => void, ms: number): unknown;
  clearTimer(handle: unknown): void;
}

export interface ClientSinks {
  /** Called for every Frame after the store is updated. */
  onFrame?(msg: FrameMsg): void;
}

export class MonitorClient {
  private socket: SocketLike | null = null;
  private retryMs = INITIAL_RETRY_MS;
  private retryHandle: unknown = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly store: Store,
    private readonly deps: ClientDeps,
    private readonly sinks: ClientSinks = {},
  ) {}

  connect(): void {
    this.stopped = false;
    this.open("connecting");
  }

  private open(banner: "connecting" | "reconnecting"): void {
    this.store.setConnection(banner, null);
    const socket = this.deps.makeSocket(this.url, [SUBPROTOCOL]);
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = INITIAL_RETRY_MS;
      this.store.setConnection("connected");
    };
    socket.onmessage = (text) => this.handle(text);
    socket.onclose = () => {
      if (this.socket !== socket) return; // superseded
      this.socket = null;
      if (!this.stopped) this.scheduleRetry();
    };
  }

  private handle(text: string): void {
    const msg = parseServerMsg(text);
    if (msg === null) return;
    this.store.apply(msg);
    if (msg.type === "Frame" && this.sinks.onFrame) this.sinks.onFrame(msg);
  }

  private scheduleRetry(): void {
    const delay = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, MAX_RETRY_MS);
    this.store.setConnection("reconnecting", delay);
    this.retryHandle = this.deps.setTimer(() => {
      this.retryHandle = null;
      if (!this.stopped) this.open("reconnecting");
    }, delay);
  }

  /** Send when the socket is up; false means the message was not sent. */
  send(msg: ClientMsg): boolean {
    if (this.socket === null || this.store.state.connection !== "connected") {
      return false;
    }
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.stopped = true;
    if (this.retryHandle !== null) {
      this.deps.clearTimer(this.retryHandle);
      this.retryHandle = null;
    }
    if (this.socket !== null) {
      this.socket.close();
      this.socket = null;
    }
  }
}
