/**
 * Live integration against a real station service (spawned python process).
 * Covers the console acceptance path: telemetry latency, gain-edit
 * round-trip visibility, and setpoint commands, all through the production
 * ConsoleSession code with a real WebSocket.
 */

import { spawn, ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";
import { ConsoleSession, WebSocketLike } from "../src/session.js";
import { GainForm } from "../src/gains.js";
import type { SnapshotMessage, TelemetryFrame } from "../src/types.js";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address && typeof address === "object") {
        const port = address.port;
        srv.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

function nodeWsFactory(url: string): WebSocketLike {
  return new WebSocket(url) as unknown as WebSocketLike;
}

let proc: ChildProcess | null = null;
let endpoint = "";

async function waitReady(url: string, timeoutMs = 45000): Promise<void> {
  const t0 = Date.now();
  for (;;) {
    try {
      const resp = await fetch(`${url}/params`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() - t0 > timeoutMs) throw new Error("station did not come up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  const port = await freePort();
  endpoint = `http://127.0.0.1:${port}`;
  proc = spawn(
    "python3",
    ["-m", "dptestbed.cli", "serve-station", "--host", "127.0.0.1",
     "--port", String(port), "--speedup", "2"],
    { stdio: "ignore" },
  );
  await waitReady(endpoint);
}, 60000);

afterAll(() => {
  proc?.kill("SIGTERM");
});

describe("console against a live station", () => {
  it("streams telemetry promptly and reflects gain edits within two steps", async () => {
    const session = new ConsoleSession(endpoint, { wsFactory: nodeWsFactory });
    const arrivals: number[] = [];
    const frames: TelemetryFrame[] = [];
    let snapshot: SnapshotMessage | null = null;

    const gotSnapshot = new Promise<void>((resolve) => {
      session.onSnapshot = (snap) => {
        snapshot = snap;
        resolve();
      };
    });
    session.onFrame = (frame) => {
      arrivals.push(Date.now());
      frames.push(frame);
    };
    session.connect();
    await gotSnapshot;
    expect(snapshot!.layout.u_max).toEqual([246, 275, 275, 480]);

    // a handful of live frames: at speedup x2 a step is 250 ms of wall time,
    // so frame-to-frame latency must stay under the 500 ms budget
    while (frames.length < 6) await new Promise((r) => setTimeout(r, 50));
    const gaps = arrivals.slice(1).map((t, i) => t - arrivals[i]);
    expect(Math.max(...gaps)).toBeLessThan(500);

    // gain edit round trip: edit -> ack -> telemetry carries the new version
    const form = new GainForm();
    form.syncFromSnapshot(snapshot!);
    expect(form.edit("pid.kp.x", 440)).toBeNull();
    const envelope = form.buildApply();
    expect(envelope).not.toBeNull();
    const ack = await session.sendCommand(envelope!);
    expect(ack.ok).toBe(true);
    form.handleAck(ack);

    const confirmed = await new Promise<TelemetryFrame>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("no confirming frame")), 5000);
      session.onFrame = (frame) => {
        if (form.observeVersion(frame.param_version)) {
          clearTimeout(timer);
          resolve(frame);
        }
      };
    });
    expect(confirmed.param_version).toBe(ack.version);
    expect(confirmed.step - (ack.applied_step ?? 0)).toBeLessThanOrEqual(2);

    const params = await session.fetchParams();
    expect(params.params["pid.kp.x"]).toBe(440);

    // setpoint command lands and is acknowledged with a step index
    const spAck = await session.sendSetpoint(5, -3, 370);
    expect(spAck.ok).toBe(true);
    expect(typeof spAck.applied_step).toBe("number");

    session.close();
  }, 30000);
});
