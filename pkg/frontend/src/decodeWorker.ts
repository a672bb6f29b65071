// Frame decode worker: keeps PPM unpacking off the interaction path.
// Messages in: { seq, b64 }; out: { seq, width, height, rgba } with the
// pixel buffer transferred, not copied.

import { decodeBase64Ppm } from "./ppm.js";

interface DecodeRequest {
  seq: number;
  b64: string;
}

self.addEventListener("message", (event) => {
  const { seq, b64 } = (event as MessageEvent<DecodeRequest>).data;
  try {
    const frame = decodeBase64Ppm(b64);
    (self as unknown as Worker).postMessage(
      { seq, width: frame.width, height: frame.height, rgba: frame.rgba },
      [frame.rgba.buffer],
    );
  } catch {
    // drop undecodable frames; the seq gap shows up in the counter
  }
});
