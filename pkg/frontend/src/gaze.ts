/**
 * Gaze input. The console has no eye tracker; the default provider treats
 * the mouse pointer over the image canvas as the gaze point. Anything that
 * can produce (x, y, t, valid) samples can stand in for it, which is how a
 * real tracker would be attached.
 *
 * Samples are published once per received tick (tick cadence), stamped with
 * the tick number as the client timestamp. Looking away is information too:
 * off-canvas samples still go out, flagged invalid, so the stabilizer on the
 * other end sees the absence rather than a stale fixation.
 */

import type { GazeWireSample } from "./protocol.js";
import type { SessionClient } from "./connection.js";

export interface GazeSource {
  /** Sample for tick t, or null when the source has nothing yet. */
  sample(t: number): GazeWireSample | null;
}

/** Minimal slice of an EventTarget so tests can fake pointer traffic. */
export interface PointerEventsLike {
  addEventListener(
    type: string,
    listener: (ev: { offsetX: number; offsetY: number }) => void,
  ): void;
}

export interface CanvasRect {
  width: number;
  height: number;
}

export interface ImageRect {
  widthPx: number;
  depthPx: number;
}

export class MouseGazeProvider implements GazeSource {
  private canvas: CanvasRect;
  private image: ImageRect;
  private lastX = 0;
  private lastY = 0;
  private inside = false;
  private seen = false;

  constructor(canvas: CanvasRect, image: ImageRect) {
    this.canvas = canvas;
    this.image = image;
  }

  /** Feed pointer movement in canvas coordinates. */
  pointerMoved(cx: number, cy: number): void {
    this.lastX = cx;
    this.lastY = cy;
    this.inside = true;
    this.seen = true;
  }

  /** Pointer left the canvas; subsequent samples are invalid. */
  pointerLeft(): void {
    this.inside = false;
  }

  /** Wire the provider to a DOM-ish event target. */
  bindTo(target: PointerEventsLike): void {
    target.addEventListener("pointermove", (ev) => this.pointerMoved(ev.offsetX, ev.offsetY));
    target.addEventListener("pointerleave", () => this.pointerLeft());
  }

  sample(t: number): GazeWireSample | null {
    if (!this.seen) return null;
    return {
      t,
      x: this.lastX * (this.image.widthPx / this.canvas.width),
      y: this.lastY * (this.image.depthPx / this.canvas.height),
      valid: this.inside,
    };
  }
}

/** Table-driven source: tick number to sample. Replays and fixtures. */
export class ScriptedGazeSource implements GazeSource {
  private table: Map<number, GazeWireSample>;

  constructor(entries: Iterable<GazeWireSample>) {
    this.table = new Map();
    for (const s of entries) this.table.set(s.t, s);
  }

  sample(t: number): GazeWireSample | null {
    return this.table.get(t) ?? null;
  }
}

export class GazePublisher {
  sent = 0;
  dropped = 0;

  constructor(
    private client: SessionClient,
    private source: GazeSource,
  ) {}

  /** Call once per applied tick; publishes this tick's sample, if any. */
  onTick(tick: number): number | null {
    const s = this.source.sample(tick);
    if (s === null) return null;
    const seq = this.client.publishGaze([s]);
    if (seq === null) {
      this.dropped += 1; // disconnected: drop, never queue stale gaze
    } else {
      this.sent += 1;
    }
    return seq;
  }
}
