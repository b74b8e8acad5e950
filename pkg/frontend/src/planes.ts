// Pixel plane transport: planes arrive as base64(zlib(row-major uint8)),
// selection masks as a flat run-length list that starts with a zero run.

import { inflateSync } from "node:zlib";

export type Inflate = (data: Uint8Array) => Uint8Array;

// swap for a DecompressionStream-based one in a browser build
export const nodeInflate: Inflate = (data) => new Uint8Array(inflateSync(data));

export function decodePlane(
  b64: string,
  rows: number,
  cols: number,
  inflate: Inflate = nodeInflate,
): Uint8Array {
  const packed = Uint8Array.from(Buffer.from(b64, "base64"));
  const raw = inflate(packed);
  if (raw.length !== rows * cols) {
    throw new Error(`plane is ${raw.length} bytes, expected ${rows}x${cols}`);
  }
  return raw;
}

/**
 * Expand a run-length mask. Runs alternate zero/one and the first run counts
 * zeros (possibly zero-length when the mask starts set). `null` means nothing
 * selected and decodes to an all-zero mask.
 */
export function decodeMaskRle(rle: number[] | null, size: number): Uint8Array {
  const mask = new Uint8Array(size);
  if (rle === null) return mask;
  let at = 0;
  let value = 0;
  for (const run of rle) {
    if (run < 0 || at + run > size) throw new Error("mask runs exceed plane size");
    if (value) mask.fill(1, at, at + run);
    at += run;
    value ^= 1;
  }
  if (at !== size) {
    throw new Error(`mask runs cover ${at} of ${size} pixels`);
  }
  return mask;
}
