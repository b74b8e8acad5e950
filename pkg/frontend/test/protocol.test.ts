import { describe, expect, it } from "vitest";

import {
  FrameDecoder,
  MAX_MESSAGE_BYTES,
  canonicalJson,
  decodeServerMessage,
  encodeFrame,
  helloMessage,
} from "../src/protocol.js";

// expected strings produced by the server-side canonical encoder
const CROSS_ENCODER_CASES: Array<[unknown, string]> = [
  [{ b: true, a: null, c: [1, 2.5, -0.75] }, '{"a":null,"b":true,"c":[1,2.5,-0.75]}'],
  [
    { nested: { z: 1, y: { k: "v" } }, s: 'q"uote\\back\nline' },
    '{"nested":{"y":{"k":"v"},"z":1},"s":"q\\"uote\\\\back\\nline"}',
  ],
  [{ text: "café ↑ \u{1f600}", n: 167.5 }, '{"n":167.5,"text":"caf\\u00e9 \\u2191 \\ud83d\\ude00"}'],
  [{ empty_obj: {}, empty_arr: [], zero: 0, neg: -3 }, '{"empty_arr":[],"empty_obj":{},"neg":-3,"zero":0}'],
];

describe("canonical json", () => {
  it("matches the server encoder on pinned cases", () => {
    for (const [value, expected] of CROSS_ENCODER_CASES) {
      expect(canonicalJson(value)).toBe(expected);
    }
  });

  it("drops undefined entries and sorts keys", () => {
    expect(canonicalJson({ b: 1, a: undefined, c: 2 })).toBe('{"b":1,"c":2}');
  });

  it("refuses non-finite numbers", () => {
    expect(() => canonicalJson({ x: Number.NaN })).toThrow(/non-finite/);
    expect(() => canonicalJson({ x: Infinity })).toThrow(/non-finite/);
  });
});

describe("framing", () => {
  it("round trips through the decoder at any chunking", () => {
    const messages = [helloMessage(), { type: "command", name: "start" }, { type: "gaze", seq: 1, samples: [] }];
    const wire = new Uint8Array(
      messages.map(encodeFrame).reduce<number[]>((acc, f) => acc.concat([...f]), []),
    );

    for (const chunkSize of [1, 3, wire.length]) {
      const dec = new FrameDecoder();
      const got: string[] = [];
      for (let at = 0; at < wire.length; at += chunkSize) {
        for (const body of dec.feed(wire.slice(at, at + chunkSize))) {
          got.push(new TextDecoder().decode(body));
        }
      }
      expect(got).toEqual(messages.map((m) => canonicalJson(m)));
      expect(dec.pending).toBe(0);
    }
  });

  it("buffers partials without emitting anything", () => {
    const dec = new FrameDecoder();
    const frame = encodeFrame({ type: "command", name: "pause" });
    expect(dec.feed(frame.slice(0, 5))).toEqual([]);
    expect(dec.pending).toBe(5);
    const out = dec.feed(frame.slice(5));
    expect(out).toHaveLength(1);
  });

  it("rejects an oversize header", () => {
    const dec = new FrameDecoder();
    const bad = new Uint8Array(4);
    new DataView(bad.buffer).setUint32(0, MAX_MESSAGE_BYTES + 1, false);
    expect(() => dec.feed(bad)).toThrow(/exceeds limit/);
  });
});

describe("server message validation", () => {
  const body = (obj: unknown) => new TextEncoder().encode(JSON.stringify(obj));

  it("accepts a well-formed error message", () => {
    const msg = decodeServerMessage(body({ type: "error", error: "busy", detail: "x" }));
    expect(msg.type).toBe("error");
  });

  it("rejects unknown types and missing fields", () => {
    expect(() => decodeServerMessage(body({ type: "mystery" }))).toThrow();
    expect(() => decodeServerMessage(body({ type: "gaze_ack", received: 1 }))).toThrow();
    expect(() => decodeServerMessage(new TextEncoder().encode("{nope"))).toThrow();
  });
});
