/**
 * Session state. One SessionCore holds everything the console knows about
 * the run: handshake data, the newest fully received tick, server state,
 * ack bookkeeping. Inbound bytes go through an ordered apply path
 * (frame splitter, validation, then state mutation), so a render can always
 * read a coherent snapshot; a tick that fails to decode is dropped whole.
 * Rendering never touches simulation state: the only writes that leave the
 * client are explicit gaze and command messages composed elsewhere.
 */

import {
  FrameDecoder,
  decodeServerMessage,
  type GazeAckMessage,
  type ServerMessage,
  type SessionState,
  type TickMessage,
} from "./protocol.js";
import { decodeMaskRle, decodePlane, nodeInflate, type Inflate } from "./planes.js";
import type { TickView } from "./overlays.js";

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "connected"
  | "reconnecting"
  | "disconnected"
  | "failed";

export interface PendingCommand {
  name: string;
  seq: number;
}

export interface SessionEvents {
  onTick?: (view: TickView) => void;
  onState?: (state: SessionState) => void;
  onAck?: (ack: { command: string; ok: boolean; detail?: string }) => void;
  onGazeAck?: (ack: GazeAckMessage) => void;
  onError?: (message: string) => void;
}

export class SessionCore {
  status: ConnectionStatus = "idle";
  connectAttempts = 0;
  lastError: string | null = null;

  scenario: Record<string, unknown> | null = null;
  scenarioSha256: string | null = null;
  serverState: SessionState | null = null;

  /** Newest fully received and decoded tick; stale is safe to render. */
  latest: TickView | null = null;
  ticksApplied = 0;
  malformedFrames = 0;
  gazeAcksReceived = 0;
  lastGazeAck: GazeAckMessage | null = null;

  /** Commands sent and not yet acknowledged, oldest first. */
  pending: PendingCommand[] = [];

  private decoder = new FrameDecoder();
  private events: SessionEvents;
  private inflate: Inflate;

  constructor(events: SessionEvents = {}, inflate: Inflate = nodeInflate) {
    this.events = events;
    this.inflate = inflate;
  }

  /** Connection layer calls this on every socket read, any chunking. */
  ingest(chunk: Uint8Array): void {
    for (const body of this.decoder.feed(chunk)) {
      let msg: ServerMessage;
      try {
        msg = decodeServerMessage(body);
      } catch (err) {
        this.malformedFrames += 1;
        this.fail(`undecodable frame: ${String(err)}`);
        continue; // skip this frame, later ones still apply in order
      }
      this.apply(msg);
    }
  }

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello_ack": {
        this.scenario = msg.scenario;
        this.scenarioSha256 = msg.scenario_sha256;
        this.serverState = msg.state;
        this.status = "connected";
        this.events.onState?.(msg.state);
        break;
      }
      case "tick": {
        let view: TickView;
        try {
          view = this.decodeTick(msg);
        } catch (err) {
          this.malformedFrames += 1;
          this.fail(`tick ${msg.payload.tick} dropped: ${String(err)}`);
          return;
        }
        this.latest = view;
        this.ticksApplied += 1;
        this.events.onTick?.(view);
        break;
      }
      case "gaze_ack": {
        this.gazeAcksReceived += 1;
        this.lastGazeAck = msg;
        this.events.onGazeAck?.(msg);
        break;
      }
      case "ack": {
        const at = this.pending.findIndex((p) => p.name === msg.command);
        if (at >= 0) this.pending.splice(at, 1);
        this.serverState = msg.state;
        if (!msg.ok) this.fail(`command ${msg.command} refused: ${msg.detail ?? "?"}`);
        this.events.onAck?.({ command: msg.command, ok: msg.ok, detail: msg.detail });
        this.events.onState?.(msg.state);
        break;
      }
      case "state": {
        this.serverState = msg;
        this.events.onState?.(msg);
        break;
      }
      case "error": {
        this.fail(`server error ${msg.error}: ${msg.detail ?? ""}`);
        if (msg.error === "version" || msg.error === "busy") {
          // unrecoverable for this client; surface and stop pretending
          this.status = "failed";
        }
        break;
      }
    }
  }

  private decodeTick(msg: TickMessage): TickView {
    const { width_px: w, depth_px: h } = msg;
    return {
      payload: msg.payload,
      widthPx: w,
      depthPx: h,
      pixelPitchMm: msg.pixel_pitch_mm,
      frame: decodePlane(msg.frame_u8, h, w, this.inflate),
      confidence: decodePlane(msg.confidence_u8, h, w, this.inflate),
      attention: decodePlane(msg.attention_u8, h, w, this.inflate),
      selectedMask: decodeMaskRle(msg.selected_mask_rle, w * h),
    };
  }

  private fail(message: string): void {
    this.lastError = message;
    this.events.onError?.(message);
  }
}
