// Scoring modes. Oracle reads the corner marker: 1.0 for bona fide, 0.0 for
// any attack class, 0.5 when no marker decodes (defined behavior on foreign
// images, distinguishable from a protocol error). Noisy adds zero-mean
// normal noise seeded from the request bytes, so identical images always
// get identical scores.
import { createHash } from "node:crypto";

import { CLASS_BONAFIDE, decodeClassIndex } from "./marker";

export type Mode = "oracle" | "noisy" | "constant" | "broken";

export function oracleScore(bytes: Buffer): number {
  const index = decodeClassIndex(bytes);
  if (index === null) return 0.5;
  return index === CLASS_BONAFIDE ? 1.0 : 0.0;
}

export function noisyScore(bytes: Buffer, sigma: number): number {
  const z = standardNormalFromHash(bytes);
  return clip(oracleScore(bytes) + sigma * z);
}

function clip(x: number): number {
  return Math.min(1, Math.max(0, x));
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    // (0, 1]: keeps log() finite below
    return (((t ^ (t >>> 14)) >>> 0) + 1) / 4294967297;
  };
}

function standardNormalFromHash(bytes: Buffer): number {
  const digest = createHash("sha256").update(bytes).digest();
  const next = mulberry32(digest.readUInt32BE(0) ^ digest.readUInt32BE(4));
  const u1 = next();
  const u2 = next();
  return Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2);
}
