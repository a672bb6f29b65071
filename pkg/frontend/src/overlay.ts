// Movement-vector overlay. Endpoints are taken from the Frame message
// verbatim (frame pixel coordinates); the canvas transform does any
// scaling, never this module.

import type { OverlayMsg } from "./protocol.js";

export interface ArrowSegment {
  origin: [number, number];
  endpoint: [number, number];
  zeroLength: boolean;
}

export function arrowFromOverlay(overlay: OverlayMsg): ArrowSegment {
  const [ox, oy] = overlay.origin_px;
  const [ex, ey] = overlay.endpoint_px;
  return {
    origin: [ox, oy],
    endpoint: [ex, ey],
    zeroLength: ox === ex && oy === ey,
  };
}

/** Drawing surface abstraction; app.ts adapts a 2D canvas context. */
export interface StrokeSink {
  line(x1: number, y1: number, x2: number, y2: number): void;
  dot(x: number, y: number): void;
}

const HEAD_LEN = 5;
const HEAD_ANGLE = Math.PI * (150 / 180);

export function drawArrow(seg: ArrowSegment, sink: StrokeSink): void {
  const [ox, oy] = seg.origin;
  if (seg.zeroLength) {
    sink.dot(ox, oy);
    return;
  }
  const [ex, ey] = seg.endpoint;
  sink.line(ox, oy, ex, ey);
  const theta = Math.atan2(ey - oy, ex - ox);
  for (const side of [-1, 1]) {
    const a = theta + side * HEAD_ANGLE;
    sink.line(ex, ey, ex + HEAD_LEN * Math.cos(a), ey + HEAD_LEN * Math.sin(a));
  }
  sink.dot(ox, oy);
}
