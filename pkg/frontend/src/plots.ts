// Live plot series. Fixed-capacity rings; a paused run simply stops
// producing ticks, so the traces freeze on their own.

import type { TickPayload } from "./protocol.js";

export class SeriesBuffer {
  readonly capacity: number;
  private ticks: number[] = [];
  private values: number[] = [];

  constructor(capacity = 600) {
    this.capacity = capacity;
  }

  push(tick: number, value: number): void {
    this.ticks.push(tick);
    this.values.push(value);
    if (this.ticks.length > this.capacity) {
      this.ticks.shift();
      this.values.shift();
    }
  }

  get length(): number {
    return this.ticks.length;
  }

  latest(): [number, number] | null {
    const n = this.ticks.length;
    return n ? [this.ticks[n - 1]!, this.values[n - 1]!] : null;
  }

  snapshot(): { ticks: number[]; values: number[] } {
    return { ticks: [...this.ticks], values: [...this.values] };
  }
}

/** The four operator traces: servo error, probe angle, contact force, and per-candidate selection evidence. */
export class PlotSet {
  readonly lateralOffsetMm: SeriesBuffer;
  readonly probeAngleRad: SeriesBuffer;
  readonly contactForceN: SeriesBuffer;
  readonly evidenceById = new Map<string, SeriesBuffer>();
  private cap: number;

  constructor(capacity = 600) {
    this.cap = capacity;
    this.lateralOffsetMm = new SeriesBuffer(capacity);
    this.probeAngleRad = new SeriesBuffer(capacity);
    this.contactForceN = new SeriesBuffer(capacity);
  }

  advance(payload: TickPayload): void {
    const t = payload.tick;
    this.lateralOffsetMm.push(t, payload.telemetry.d_c_mm);
    this.probeAngleRad.push(t, payload.telemetry.theta_rad);
    this.contactForceN.push(t, payload.telemetry.force_n);
    for (const [id, value] of Object.entries(payload.evidence)) {
      let series = this.evidenceById.get(id);
      if (!series) {
        series = new SeriesBuffer(this.cap);
        this.evidenceById.set(id, series);
      }
      series.push(t, value);
    }
  }
}
