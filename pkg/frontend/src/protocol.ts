/**
 * Wire protocol, client side (version 1).
 *
 * Transport framing: every message is a 4-byte big-endian length prefix
 * followed by that many bytes of UTF-8 JSON. Outbound messages are encoded
 * canonically (keys sorted, no whitespace, non-ASCII escaped) so a session
 * transcript is byte-reproducible. Inbound messages are validated before
 * anything downstream may observe them; a frame that fails validation is
 * reported and dropped, never partially applied.
 */

import { z } from "zod";

export const PROTOCOL_VERSION = 1;
export const MAX_MESSAGE_BYTES = 8 << 20;

// ---------------------------------------------------------------------------
// Canonical JSON

/**
 * Serialize like the server does: sorted keys, "," and ":" separators, ASCII
 * only. Matches the reference encoder for JSON scalars as long as numbers
 * stay in the plain-decimal range; this client never emits values outside it
 * (pixels, ticks, sequence numbers, booleans). Non-finite numbers are a
 * programming error and throw.
 */
export function canonicalJson(value: unknown): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error(`non-finite number in message: ${value}`);
    return String(value);
  }
  if (typeof value === "string") return escapeAscii(value);
  if (Array.isArray(value)) return `[${value.map(canonicalJson).join(",")}]`;
  if (typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .filter(([, v]) => v !== undefined)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
    return `{${entries.map(([k, v]) => `${escapeAscii(k)}:${canonicalJson(v)}`).join(",")}}`;
  }
  throw new Error(`cannot serialize ${typeof value}`);
}

function escapeAscii(s: string): string {
  // JSON.stringify handles quotes, backslashes and control characters; it
  // leaves non-ASCII literal, which the reference encoder escapes as \uXXXX
  // (UTF-16 code units, so astral chars become surrogate pairs).
  return JSON.stringify(s).replace(
    /[-￿]/g,
    (ch) => `\\u${ch.charCodeAt(0).toString(16).padStart(4, "0")}`,
  );
}

// ---------------------------------------------------------------------------
// Framing

export function encodeFrame(message: unknown): Uint8Array {
  const body = new TextEncoder().encode(canonicalJson(message));
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/**
 * Incremental frame splitter. Feed arbitrary chunk boundaries; complete
 * message bodies come out in order. Partial input is buffered, never
 * blocking and never surfacing a half message.
 */
export class FrameDecoder {
  private buf = new Uint8Array(0);

  feed(chunk: Uint8Array): Uint8Array[] {
    const joined = new Uint8Array(this.buf.length + chunk.length);
    joined.set(this.buf, 0);
    joined.set(chunk, this.buf.length);
    this.buf = joined;

    const frames: Uint8Array[] = [];
    while (this.buf.length >= 4) {
      const n = new DataView(this.buf.buffer, this.buf.byteOffset).getUint32(0, false);
      if (n > MAX_MESSAGE_BYTES) {
        throw new Error(`frame of ${n} bytes exceeds limit`);
      }
      if (this.buf.length < 4 + n) break;
      frames.push(this.buf.slice(4, 4 + n));
      this.buf = this.buf.slice(4 + n);
    }
    return frames;
  }

  /** Bytes sitting in the buffer (diagnostics only). */
  get pending(): number {
    return this.buf.length;
  }
}

// ---------------------------------------------------------------------------
// Client -> server messages

export interface HelloMessage {
  type: "hello";
  protocol: number;
}

export interface GazeWireSample {
  t: number;
  x: number;
  y: number;
  valid: boolean;
}

export interface GazeMessage {
  type: "gaze";
  seq: number;
  samples: GazeWireSample[];
}

export interface CommandMessage {
  type: "command";
  name: string;
  value?: boolean;
  params?: Record<string, number | boolean>;
}

export type ClientMessage = HelloMessage | GazeMessage | CommandMessage;

export function helloMessage(): HelloMessage {
  return { type: "hello", protocol: PROTOCOL_VERSION };
}

// ---------------------------------------------------------------------------
// Server -> client messages

const stateSchema = z.object({
  type: z.literal("state"),
  running: z.boolean(),
  finished: z.boolean(),
  tick: z.number().int(),
  duration_ticks: z.number().int(),
  correction: z.boolean(),
  gaze_dropped_late: z.number().int(),
});

const telemetrySchema = z.object({
  x_mm: z.number(),
  y_mm: z.number(),
  z_mm: z.number(),
  theta_rad: z.number(),
  force_n: z.number(),
  x_c_px: z.number(),
  d_c_mm: z.number(),
  theta_c_rad: z.number(),
});

const candidateSchema = z.object({
  id: z.number().int(),
  centroid_px: z.tuple([z.number(), z.number()]), // (col, row)
  area_px: z.number().int(),
});

const tickPayloadSchema = z.object({
  type: z.literal("tick"),
  tick: z.number().int(),
  frame_sha256: z.string(),
  raw_gaze_sha256: z.string(),
  attention_sha256: z.string(),
  gaze: z.array(z.tuple([z.number(), z.number(), z.number(), z.number()])),
  candidates: z.array(candidateSchema),
  selected_id: z.number().int().nullable(),
  attention_used: z.string(),
  evidence: z.record(z.string(), z.number()),
  target_id: z.number().int().nullable(),
  gaze_winner_id: z.number().int().nullable(),
  telemetry: telemetrySchema,
  gt: z.object({
    lumen_count: z.number().int(),
    branch: z.string().nullable(),
    dice: z.number().nullable(),
  }),
});

const tickSchema = z.object({
  type: z.literal("tick"),
  protocol: z.number().int(),
  payload: tickPayloadSchema,
  width_px: z.number().int().positive(),
  depth_px: z.number().int().positive(),
  pixel_pitch_mm: z.number().positive(),
  frame_u8: z.string(),
  confidence_u8: z.string(),
  attention_u8: z.string(),
  selected_mask_rle: z.array(z.number().int().nonnegative()).nullable(),
});

const helloAckSchema = z.object({
  type: z.literal("hello_ack"),
  protocol: z.number().int(),
  scenario: z.record(z.string(), z.unknown()),
  scenario_sha256: z.string(),
  state: stateSchema,
});

const gazeAckSchema = z.object({
  type: z.literal("gaze_ack"),
  received: z.number().int(),
  tick: z.number().int(),
  client_seq: z.number().int().nullable(),
});

const commandAckSchema = z.object({
  type: z.literal("ack"),
  command: z.string(),
  ok: z.boolean(),
  state: stateSchema,
  detail: z.string().optional(),
});

const errorSchema = z.object({
  type: z.literal("error"),
  error: z.string(),
  detail: z.string().optional(),
});

const serverMessageSchema = z.discriminatedUnion("type", [
  helloAckSchema,
  tickSchema,
  gazeAckSchema,
  commandAckSchema,
  stateSchema,
  errorSchema,
]);

export type SessionState = z.infer<typeof stateSchema>;
export type Telemetry = z.infer<typeof telemetrySchema>;
export type CandidateInfo = z.infer<typeof candidateSchema>;
export type TickPayload = z.infer<typeof tickPayloadSchema>;
export type TickMessage = z.infer<typeof tickSchema>;
export type HelloAckMessage = z.infer<typeof helloAckSchema>;
export type GazeAckMessage = z.infer<typeof gazeAckSchema>;
export type CommandAckMessage = z.infer<typeof commandAckSchema>;
export type ErrorMessage = z.infer<typeof errorSchema>;
export type ServerMessage = z.infer<typeof serverMessageSchema>;

/** Parse and validate one inbound frame body. Throws on anything malformed. */
export function decodeServerMessage(body: Uint8Array): ServerMessage {
  const text = new TextDecoder("utf-8", { fatal: true }).decode(body);
  return serverMessageSchema.parse(JSON.parse(text));
}
