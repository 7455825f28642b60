// Corner-marker decoding. The corpus generator stamps one row of 8 square
// cells into the top-left corner (cell side = min(w, h) / 16, floored, at
// least 1 px), each cell all-black or all-white:
//
//   [1, 0, 1, 0,  b1, b0,  parity, 1]
//
// b1 b0 is the class index (0 bona fide, 1 print, 2 screen, 3 composite),
// parity the even parity of the two bits. A bad frame or parity means the
// image carries no marker.
import { decodePng } from "./png";

const MARKER_CELLS = 8;
const SYNC = [1, 0, 1, 0];

export const CLASS_BONAFIDE = 0;

export function decodeClassIndex(bytes: Buffer): number | null {
  const image = decodePng(bytes);
  if (image === null) return null;
  const cell = Math.max(1, Math.floor(Math.min(image.width, image.height) / 16));
  if (MARKER_CELLS * cell > image.width || cell > image.height) return null;

  const bits: number[] = [];
  const row = cell >> 1;
  for (let i = 0; i < MARKER_CELLS; i++) {
    const col = i * cell + (cell >> 1);
    const at = (row * image.width + col) * image.channels;
    const mean =
      (image.data[at] + image.data[at + 1] + image.data[at + 2]) / 3;
    bits.push(Math.trunc(mean) > 127 ? 1 : 0);
  }

  for (let i = 0; i < SYNC.length; i++) {
    if (bits[i] !== SYNC[i]) return null;
  }
  if (bits[7] !== 1) return null;
  const b1 = bits[4];
  const b0 = bits[5];
  if (bits[6] !== (b1 + b0) % 2) return null;
  return (b1 << 1) | b0;
}
