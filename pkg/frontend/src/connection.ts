/**
 * Connection management: dial, handshake, retry with backoff, reconnect.
 *
 * The transport is injected so tests can run the full client against an
 * in-memory peer; production uses the TCP connector below. All message
 * traffic funnels through one SessionCore, giving a single ordered apply
 * path regardless of how often the socket underneath was replaced.
 */

import * as net from "node:net";

import { encodeFrame, helloMessage, type CommandMessage, type GazeWireSample } from "./protocol.js";
import { SessionCore, type SessionEvents } from "./session.js";
import type { Inflate } from "./planes.js";
import { nodeInflate } from "./planes.js";

export interface TransportEvents {
  onData(chunk: Uint8Array): void;
  onClose(): void;
  onError(err: Error): void;
}

export interface Transport {
  write(bytes: Uint8Array): void;
  close(): void;
}

export type Connector = (
  host: string,
  port: number,
  events: TransportEvents,
) => Promise<Transport>;

/** Plain TCP transport. */
export const tcpConnector: Connector = (host, port, events) =>
  new Promise((resolve, reject) => {
    const sock = net.connect({ host, port, noDelay: true });
    sock.once("connect", () => {
      sock.on("data", (chunk) => events.onData(chunk));
      sock.on("close", () => events.onClose());
      sock.on("error", (err) => events.onError(err));
      resolve({
        write: (bytes) => void sock.write(bytes),
        close: () => sock.destroy(),
      });
    });
    sock.once("error", (err) => reject(err));
  });

export interface ClientOptions {
  connector?: Connector;
  inflate?: Inflate;
  /** Delays between dial attempts, last entry repeats. */
  backoffMs?: number[];
  /** Give up after this many consecutive failed dials (0 = never). */
  maxRetries?: number;
  reconnect?: boolean;
}

export class SessionClient {
  readonly core: SessionCore;
  private readonly host: string;
  private readonly port: number;
  private readonly connector: Connector;
  private readonly backoff: number[];
  private readonly maxRetries: number;
  private readonly wantReconnect: boolean;
  private transport: Transport | null = null;
  private closed = false;
  private gazeSeq = 0;
  private commandSeq = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(host: string, port: number, events: SessionEvents = {}, opts: ClientOptions = {}) {
    this.host = host;
    this.port = port;
    this.connector = opts.connector ?? tcpConnector;
    this.backoff = opts.backoffMs ?? [200, 400, 800, 1600, 2000];
    this.maxRetries = opts.maxRetries ?? 0;
    this.wantReconnect = opts.reconnect ?? true;
    this.core = new SessionCore(events, opts.inflate ?? nodeInflate);
  }

  get status() {
    return this.core.status;
  }

  get connected(): boolean {
    return this.transport !== null && this.core.status === "connected";
  }

  /** Dial until the handshake is away; resolves after the hello is sent. */
  async connect(): Promise<void> {
    this.closed = false;
    if (this.core.status !== "reconnecting") this.core.status = "connecting";
    for (let attempt = 0; ; attempt++) {
      if (this.closed) return;
      this.core.connectAttempts += 1;
      try {
        this.transport = await this.connector(this.host, this.port, {
          onData: (chunk) => this.core.ingest(chunk),
          onClose: () => this.handleDrop(),
          onError: () => {}, // close always follows; one handler is enough
        });
        break;
      } catch (err) {
        this.core.lastError = `dial failed: ${String(err)}`;
        if (this.maxRetries > 0 && attempt + 1 >= this.maxRetries) {
          this.core.status = "failed";
          throw new Error(this.core.lastError);
        }
        await this.sleep(this.backoff[Math.min(attempt, this.backoff.length - 1)]!);
      }
    }
    this.send(helloMessage());
  }

  /** Drop the wire on purpose (no automatic redial). */
  close(): void {
    this.closed = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.transport?.close();
    this.transport = null;
    this.core.status = "disconnected";
  }

  /**
   * One gaze message at tick cadence. Returns the sequence number, or null
   * when disconnected (samples are dropped, not queued: stale gaze is worse
   * than no gaze).
   */
  publishGaze(samples: GazeWireSample[]): number | null {
    if (!this.connected || samples.length === 0) return null;
    this.gazeSeq += 1;
    this.send({ type: "gaze", seq: this.gazeSeq, samples });
    return this.gazeSeq;
  }

  /** Send a control command; false when there is no live connection. */
  command(name: string, extra: Omit<CommandMessage, "type" | "name"> = {}): boolean {
    if (this.transport === null || this.core.status === "failed") return false;
    this.core.pending.push({ name, seq: ++this.commandSeq });
    this.send({ type: "command", name, ...extra });
    return true;
  }

  private send(message: unknown): void {
    this.transport?.write(encodeFrame(message));
  }

  private handleDrop(): void {
    this.transport = null;
    if (this.closed) return;
    if (!this.wantReconnect) {
      this.core.status = "disconnected";
      return;
    }
    // server keeps the session alive across drops; redial and resume
    this.core.status = "reconnecting";
    this.core.pending = [];
    void this.connect().catch(() => {});
  }

  private sleep(ms: number): Promise<void> {
    return new Promise((resolve) => {
      this.retryTimer = setTimeout(resolve, ms);
    });
  }
}
