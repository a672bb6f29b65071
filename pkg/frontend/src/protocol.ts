// Wire types for the "pilotstack.v1" WebSocket protocol. Field names
// mirror the server JSON exactly; nothing here is renamed or derived.

export const SUBPROTOCOL = "pilotstack.v1";

export type Mode = "human" | "autopilot";
export type Role = "driver" | "observer";

export interface StatusMsg {
  type: "Status";
  recording: boolean;
  mode: Mode;
  session_id: string | null;
  records_written: number;
  /** Present on messages addressed to one connection. */
  role?: Role;
}

export interface VehicleStateMsg {
  x: number;
  y: number;
  heading: number;
  speed: number;
}

export interface OverlayMsg {
  origin_px: [number, number];
  endpoint_px: [number, number];
}

export interface FrameMsg {
  type: "Frame";
  seq: number;
  width: number;
  height: number;
  /** Base64 of a binary P6 PPM image. */
  jpeg_or_ppm: string;
  state: VehicleStateMsg;
  overlay: OverlayMsg;
}

export interface AckMsg {
  type: "Ack";
  steering: number;
  throttle: number;
  state: VehicleStateMsg;
}

export interface ErrorMsg {
  type: "Error";
  error: string;
  detail: string;
}

export type ServerMsg = StatusMsg | FrameMsg | AckMsg | ErrorMsg;

export interface CommandMsg {
  type: "Command";
  steering: number;
  throttle: number;
}

export interface RecordToggleMsg {
  type: "RecordToggle";
  on: boolean;
}

export interface ModeSwitchMsg {
  type: "ModeSwitch";
  mode: Mode;
}

export type ClientMsg = CommandMsg | RecordToggleMsg | ModeSwitchMsg;

export function parseServerMsg(text: string): ServerMsg | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const type = (raw as { type?: unknown }).type;
  if (type === "Status" || type === "Frame" || type === "Ack" ||
      type === "Error") {
    return raw as ServerMsg;
  }
  return null;
}
