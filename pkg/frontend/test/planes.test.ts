import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { decodeMaskRle, decodePlane } from "../src/planes.js";

const fixture = JSON.parse(
  readFileSync(new URL("fixtures/planes.json", import.meta.url), "utf-8"),
) as {
  rows: number;
  cols: number;
  plane_b64: string;
  expected_u8: number[];
  mask_rle: number[];
  mask_size: number;
  expected_mask: number[];
};

describe("plane decoding", () => {
  it("decodes the reference-encoded plane byte for byte", () => {
    const plane = decodePlane(fixture.plane_b64, fixture.rows, fixture.cols);
    expect([...plane]).toEqual(fixture.expected_u8);
  });

  it("rejects a size mismatch", () => {
    expect(() => decodePlane(fixture.plane_b64, fixture.rows + 1, fixture.cols)).toThrow(
      /expected/,
    );
  });
});

describe("mask rle", () => {
  it("decodes the fixture run list", () => {
    const mask = decodeMaskRle(fixture.mask_rle, fixture.mask_size);
    expect([...mask]).toEqual(fixture.expected_mask);
  });

  it("treats null as nothing selected", () => {
    expect([...decodeMaskRle(null, 4)]).toEqual([0, 0, 0, 0]);
  });

  it("handles a mask that starts set (leading zero run)", () => {
    expect([...decodeMaskRle([0, 2, 3], 5)]).toEqual([1, 1, 0, 0, 0]);
  });

  it("rejects runs that do not cover the plane", () => {
    expect(() => decodeMaskRle([1, 1], 5)).toThrow(/cover/);
    expect(() => decodeMaskRle([4, 4], 5)).toThrow(/exceed/);
  });
});
