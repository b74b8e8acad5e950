import { deflateSync } from "node:zlib";

import { describe, expect, it } from "vitest";

import { SessionCore } from "../src/session.js";
import { encodeFrame } from "../src/protocol.js";

const W = 8;
const D = 6;

function planeB64(fill: (i: number) => number): string {
  const u8 = new Uint8Array(W * D);
  for (let i = 0; i < u8.length; i++) u8[i] = fill(i) & 0xff;
  return deflateSync(u8).toString("base64");
}

function stateObj(tick: number, extra: Record<string, unknown> = {}) {
  return {
    type: "state",
    running: true,
    finished: false,
    tick,
    duration_ticks: 40,
    correction: true,
    gaze_dropped_late: 0,
    ...extra,
  };
}

function tickObj(tick: number, extra: Record<string, unknown> = {}) {
  return {
    type: "tick",
    protocol: 1,
    payload: {
      type: "tick",
      tick,
      frame_sha256: "f",
      raw_gaze_sha256: "g",
      attention_sha256: "a",
      gaze: [[tick, 4.5, 3, 1]],
      candidates: [{ id: 1, centroid_px: [3.5, 2.5], area_px: 6 }],
      selected_id: 1,
      attention_used: "stabilized",
      evidence: { "1": 0.9 },
      target_id: 1,
      gaze_winner_id: 1,
      telemetry: {
        x_mm: 0, y_mm: tick * 0.3, z_mm: 35, theta_rad: 0.01,
        force_n: 5, x_c_px: 3.6, d_c_mm: 0.015, theta_c_rad: 1e-4,
      },
      gt: { lumen_count: 1, branch: "trunk", dice: 0.95 },
    },
    width_px: W,
    depth_px: D,
    pixel_pitch_mm: 0.15,
    frame_u8: planeB64((i) => i),
    confidence_u8: planeB64(() => 200),
    attention_u8: planeB64(() => 0),
    selected_mask_rle: [10, 4, W * D - 14],
    ...extra,
  };
}

function helloAckObj() {
  return {
    type: "hello_ack",
    protocol: 1,
    scenario: { name: "synthetic", duration_ticks: 40 },
    scenario_sha256: "ab12",
    state: stateObj(0, { running: false }),
  };
}

describe("ordered apply", () => {
  it("applies handshake then ticks across arbitrary chunk boundaries", () => {
    const core = new SessionCore();
    const wire = Buffer.concat(
      [helloAckObj(), tickObj(0), tickObj(1), tickObj(2)].map((m) => Buffer.from(encodeFrame(m))),
    );
    for (let at = 0; at < wire.length; at += 7) {
      core.ingest(wire.subarray(at, at + 7));
    }
    expect(core.status).toBe("connected");
    expect(core.scenarioSha256).toBe("ab12");
    expect(core.ticksApplied).toBe(3);
    expect(core.latest?.payload.tick).toBe(2);
    expect(core.latest?.frame[5]).toBe(5);
    expect(core.latest?.selectedMask[10]).toBe(1);
    expect(core.latest?.selectedMask[14]).toBe(0);
  });

  it("a partial trailing frame never surfaces", () => {
    const core = new SessionCore();
    core.ingest(encodeFrame(helloAckObj()));
    core.ingest(encodeFrame(tickObj(0)));
    const next = encodeFrame(tickObj(1));
    core.ingest(next.slice(0, next.length - 3));
    expect(core.ticksApplied).toBe(1);
    expect(core.latest?.payload.tick).toBe(0);
    core.ingest(next.slice(next.length - 3));
    expect(core.latest?.payload.tick).toBe(1);
  });

  it("skips an undecodable frame and keeps going", () => {
    const errors: string[] = [];
    const core = new SessionCore({ onError: (m) => errors.push(m) });
    const junk = new TextEncoder().encode("{not json");
    const framed = new Uint8Array(4 + junk.length);
    new DataView(framed.buffer).setUint32(0, junk.length, false);
    framed.set(junk, 4);
    core.ingest(encodeFrame(helloAckObj()));
    core.ingest(framed);
    core.ingest(encodeFrame(tickObj(0)));
    expect(core.malformedFrames).toBe(1);
    expect(core.ticksApplied).toBe(1);
    expect(errors.some((e) => e.includes("undecodable"))).toBe(true);
  });

  it("drops a tick whose planes do not decode, keeping the last good one", () => {
    const core = new SessionCore();
    core.ingest(encodeFrame(tickObj(0)));
    // runs cover too few pixels: the whole tick must be discarded
    core.ingest(encodeFrame(tickObj(1, { selected_mask_rle: [3, 4] })));
    expect(core.ticksApplied).toBe(1);
    expect(core.latest?.payload.tick).toBe(0);
    expect(core.malformedFrames).toBe(1);
  });
});

describe("acks and state", () => {
  it("acks retire pending commands in order and carry state", () => {
    const acks: Array<{ command: string; ok: boolean }> = [];
    const core = new SessionCore({ onAck: (a) => acks.push(a) });
    core.pending.push({ name: "start", seq: 1 });
    core.ingest(
      encodeFrame({ type: "ack", command: "start", ok: true, state: stateObj(5) }),
    );
    expect(core.pending).toHaveLength(0);
    expect(core.serverState?.tick).toBe(5);
    expect(acks).toEqual([{ command: "start", ok: true, detail: undefined }]);
  });

  it("a refused command surfaces its detail", () => {
    const core = new SessionCore();
    core.pending.push({ name: "set_params", seq: 1 });
    core.ingest(
      encodeFrame({
        type: "ack",
        command: "set_params",
        ok: false,
        detail: "unknown params: warp",
        state: stateObj(5),
      }),
    );
    expect(core.lastError).toContain("unknown params: warp");
  });

  it("a bare state message updates the view", () => {
    const core = new SessionCore();
    core.ingest(encodeFrame(stateObj(40, { running: false, finished: true })));
    expect(core.serverState?.finished).toBe(true);
  });

  it("version and busy errors are terminal", () => {
    const core = new SessionCore();
    core.ingest(encodeFrame({ type: "error", error: "version", detail: "protocol 9" }));
    expect(core.status).toBe("failed");
    expect(core.lastError).toContain("protocol 9");
  });
});
