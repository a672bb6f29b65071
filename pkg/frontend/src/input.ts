// Driving input models. Pure state machines stepped with explicit dt so
// tests can run on a virtual clock; the DOM wiring lives in app.ts.

export interface AxisPair {
  steering: number;
  throttle: number;
}

// full deflection in 0.5 s, release to center in 0.3 s
export const ATTACK_RATE = 1.0 / 0.5;
export const RELEASE_RATE = 1.0 / 0.3;
export const GAMEPAD_DEADZONE = 0.05;

const KEY_BINDINGS: Record<string, keyof KeyboardRamp["held"]> = {
  ArrowLeft: "left",
  KeyA: "left",
  ArrowRight: "right",
  KeyD: "right",
  ArrowUp: "up",
  KeyW: "up",
  ArrowDown: "down",
  KeyS: "down",
};

function approach(value: number, target: number, dt: number): number {
  const rate = target !== 0 ? ATTACK_RATE : RELEASE_RATE;
  const limit = rate * dt;
  const gap = target - value;
  if (Math.abs(gap) <= limit) return target;
  return value + Math.sign(gap) * limit;
}

/** Keyboard steering/throttle with attack and release ramps, so taps
 *  produce gentle commands instead of bang-bang labels. */
export class KeyboardRamp {
  held = { left: false, right: false, up: false, down: false };
  private steering = 0;
  private throttle = 0;

  /** Returns true when the key code is a driving key. */
  keyDown(code: string): boolean {
    const slot = KEY_BINDINGS[code];
    if (slot === undefined) return false;
    this.held[slot] = true;
    return true;
  }

  keyUp(code: string): boolean {
    const slot = KEY_BINDINGS[code];
    if (slot === undefined) return false;
    this.held[slot] = false;
    return true;
  }

  releaseAll(): void {
    this.held = { left: false, right: false, up: false, down: false };
  }

  step(dtSeconds: number): AxisPair {
    const steerTarget = (this.held.right ? 1 : 0) - (this.held.left ? 1 : 0);
    const throttleTarget = (this.held.up ? 1 : 0) - (this.held.down ? 1 : 0);
    this.steering = approach(this.steering, steerTarget, dtSeconds);
    this.throttle = approach(this.throttle, throttleTarget, dtSeconds);
    return this.current();
  }

  current(): AxisPair {
    return { steering: this.steering, throttle: this.throttle };
  }
}

export interface GamepadSnapshot {
  leftStickX: number;
  rightTrigger: number;
  leftTrigger: number;
}

function stripDeadzone(v: number): number {
  return Math.abs(v) < GAMEPAD_DEADZONE ? 0 : Math.max(-1, Math.min(1, v));
}

/** Left stick X is steering; throttle is right trigger minus left. */
export function gamepadAxes(pad: GamepadSnapshot): AxisPair {
  return {
    steering: stripDeadzone(pad.leftStickX),
    throttle: stripDeadzone(pad.rightTrigger - pad.leftTrigger),
  };
}

export type InputSource = "keyboard" | "gamepad";

/** Merges the two sources: a connected gamepad wins, keyboard otherwise. */
export class InputRig {
  readonly keyboard = new KeyboardRamp();
  private pad: GamepadSnapshot | null = null;

  setGamepad(pad: GamepadSnapshot | null): void {
    this.pad = pad;
  }

  source(): InputSource {
    return this.pad !== null ? "gamepad" : "keyboard";
  }

  /** Advance ramps by dt and return the active source's axes. */
  step(dtSeconds: number): AxisPair {
    const kb = this.keyboard.step(dtSeconds);
    return this.pad !== null ? gamepadAxes(this.pad) : kb;
  }
}
