// Command pacing: one decision per 50 ms tick. A command goes out while
// the axes are nonzero or just changed; a parked stick stays silent, so
// an idle cockpit sends nothing and the stop transition is still
// delivered exactly once.

import type { AxisPair } from "./input.js";
import type { CommandMsg } from "./protocol.js";

export const COMMAND_HZ = 20;
export const TICK_MS = 1000 / COMMAND_HZ;

function clamp(v: number): number {
  return Math.max(-1, Math.min(1, v));
}

export class CommandEmitter {
  private lastSent: AxisPair | null = null;

  next(axes: AxisPair, canDrive: boolean): CommandMsg | null {
    if (!canDrive) return null;
    const steering = clamp(axes.steering);
    const throttle = clamp(axes.throttle);
    const nonzero = steering !== 0 || throttle !== 0;
    const changed = this.lastSent === null
      ? nonzero
      : steering !== this.lastSent.steering ||
        throttle !== this.lastSent.throttle;
    if (!nonzero && !changed) return null;
    this.lastSent = { steering, throttle };
    return { type: "Command", steering, throttle };
  }
}
