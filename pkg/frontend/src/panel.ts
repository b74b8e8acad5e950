/**
 * Control panel model: the buttons and the scenario picker, minus any
 * widget toolkit. Every action is an explicit command message; nothing
 * here reaches into simulation state by other means.
 *
 * Scenario selection is an endpoint switch. Protocol version 1 pins one
 * scenario per server process, so "select a scenario" means dialing the
 * server that runs it; the handshake echoes the scenario definition and
 * its digest, which is the validation the picker surfaces.
 */

import type { SessionClient } from "./connection.js";

export interface ScenarioEndpoint {
  label: string;
  host: string;
  port: number;
}

export type ClientFactory = (host: string, port: number) => SessionClient;

export class ControlPanel {
  client: SessionClient | null = null;
  activeScenario: string | null = null;

  constructor(
    private makeClient: ClientFactory,
    readonly endpoints: ScenarioEndpoint[] = [],
  ) {}

  start(): boolean {
    return this.client?.command("start") ?? false;
  }

  pause(): boolean {
    return this.client?.command("pause") ?? false;
  }

  reset(): boolean {
    return this.client?.command("reset") ?? false;
  }

  toggleCorrection(): boolean {
    return this.client?.command("toggle_correction") ?? false;
  }

  setCorrection(value: boolean): boolean {
    return this.client?.command("set_correction", { value }) ?? false;
  }

  setParams(params: Record<string, number | boolean>): boolean {
    return this.client?.command("set_params", { params }) ?? false;
  }

  /**
   * Dial the server behind the named endpoint and wait for its handshake.
   * Resolves to the scenario name the server reports; rejects when the
   * endpoint is unknown or the dial gives up.
   */
  async selectScenario(label: string): Promise<string> {
    const ep = this.endpoints.find((e) => e.label === label);
    if (!ep) throw new Error(`unknown scenario endpoint ${label}`);
    this.client?.close();
    const client = this.makeClient(ep.host, ep.port);
    this.client = client;
    await client.connect();
    await waitFor(() => client.core.status === "connected" || client.core.status === "failed");
    if (client.core.status !== "connected") {
      throw new Error(client.core.lastError ?? "handshake failed");
    }
    const name = (client.core.scenario?.["name"] as string | undefined) ?? "?";
    this.activeScenario = name;
    return name;
  }
}

function waitFor(done: () => boolean, timeoutMs = 5000): Promise<void> {
  return new Promise((resolve, reject) => {
    const t0 = Date.now();
    const poll = () => {
      if (done()) return resolve();
      if (Date.now() - t0 > timeoutMs) return reject(new Error("timed out"));
      setTimeout(poll, 5);
    };
    poll();
  });
}
