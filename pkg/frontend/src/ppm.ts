// Binary P6 PPM decoding. The server encodes every camera frame as a
// base64 PPM with maxval 255, so this is the whole codec.

export interface DecodedFrame {
  width: number;
  height: number;
  /** RGBA, ready for putImageData. */
  rgba: Uint8ClampedArray;
}

export function base64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

const WS = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

/** Parse the three header integers, tolerating any whitespace runs. */
function readHeader(bytes: Uint8Array): { width: number; height: number; start: number } {
  if (bytes.length < 2 || bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new Error("not a P6 ppm");
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < bytes.length && WS.has(bytes[pos])) pos++;
    let value = 0;
    let digits = 0;
    while (pos < bytes.length && bytes[pos] >= 0x30 && bytes[pos] <= 0x39) {
      value = value * 10 + (bytes[pos] - 0x30);
      digits++;
      pos++;
    }
    if (digits === 0) throw new Error("truncated ppm header");
    fields.push(value);
  }
  // exactly one whitespace byte separates the header from pixel data
  if (pos >= bytes.length || !WS.has(bytes[pos])) {
    throw new Error("ppm header not terminated");
  }
  pos++;
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`unsupported ppm maxval ${maxval}`);
  if (width < 1 || height < 1) throw new Error("bad ppm dimensions");
  return { width, height, start: pos };
}

export function decodePpm(bytes: Uint8Array): DecodedFrame {
  const { width, height, start } = readHeader(bytes);
  const need = width * height * 3;
  if (bytes.length - start < need) {
    throw new Error(`ppm pixel data short: ${bytes.length - start} < ${need}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  let src = start;
  for (let dst = 0; dst < rgba.length; dst += 4) {
    rgba[dst] = bytes[src++];
    rgba[dst + 1] = bytes[src++];
    rgba[dst + 2] = bytes[src++];
    rgba[dst + 3] = 255;
  }
  return { width, height, rgba };
}

export function decodeBase64Ppm(b64: string): DecodedFrame {
  return decodePpm(base64ToBytes(b64));
}
