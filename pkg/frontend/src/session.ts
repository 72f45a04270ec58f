/**
 * Console session against one station service.
 *
 * All UI state derives from the telemetry stream plus command acks; the
 * client computes no physics. Reconnects use exponential backoff, and the
 * frame history records a gap marker whenever the subscription breaks so
 * plots do not silently bridge missing data. Parameters re-sync from the
 * snapshot that opens every (re)connection.
 *
 * Transports are injectable so the logic is testable without a network.
 */

import type {
  CommandAck,
  CommandEnvelope,
  SnapshotMessage,
  TelemetryFrame,
  TelemetryMessage,
} from "./types.js";
import { degToRad, normalizeHeadingDeg, wrapRad } from "./angles.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface WebSocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  close(): void;
}

export interface SessionHooks {
  wsFactory?: (url: string) => WebSocketLike;
  fetchFn?: typeof fetch;
  /** schedule(fn, ms): timer injection for backoff tests */
  schedule?: (fn: () => void, ms: number) => unknown;
  now?: () => number;
}

export interface HistoryEntry {
  frame: TelemetryFrame | null; // null marks a subscription gap
  gap: boolean;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 8000;
const HISTORY_LIMIT = 4096;

export class ConsoleSession {
  readonly endpoint: string;
  status: ConnectionStatus = "disconnected";
  snapshot: SnapshotMessage | null = null;
  latest: TelemetryFrame | null = null;
  history: HistoryEntry[] = [];
  connectAttempts = 0;

  onStatus: ((status: ConnectionStatus) => void) | null = null;
  onFrame: ((frame: TelemetryFrame) => void) | null = null;
  onSnapshot: ((snap: SnapshotMessage) => void) | null = null;

  private ws: WebSocketLike | null = null;
  private closed = false;
  private requestCounter = 0;
  private readonly hooks: Required<SessionHooks>;

  constructor(endpoint: string, hooks: SessionHooks = {}) {
    this.endpoint = endpoint.replace(/\/+$/, "");
    this.hooks = {
      wsFactory: hooks.wsFactory
        ?? ((url: string) => new WebSocket(url) as unknown as WebSocketLike),
      fetchFn: hooks.fetchFn ?? fetch.bind(globalThis),
      schedule: hooks.schedule ?? ((fn, ms) => setTimeout(fn, ms)),
      now: hooks.now ?? (() => Date.now()),
    };
  }

  get telemetryUrl(): string {
    return this.endpoint.replace(/^http/, "ws") + "/telemetry";
  }

  connect(): void {
    if (this.closed) return;
    this.setStatus("connecting");
    const ws = this.hooks.wsFactory(this.telemetryUrl);
    this.ws = ws;
    ws.onopen = () => this.setStatus("connected");
    ws.onmessage = (event) => this.handleMessage(String(event.data));
    const drop = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      this.connectAttempts += 1;
      this.markGap();
      this.setStatus("disconnected");
      this.scheduleReconnect();
    };
    ws.onclose = drop;
    ws.onerror = drop;
  }

  close(): void {
    this.closed = true;
    if (this.ws) this.ws.close();
    this.ws = null;
    this.setStatus("disconnected");
  }

  private scheduleReconnect(): void {
    if (this.closed) return;
    const delay = Math.min(
      BACKOFF_CAP_MS,
      BACKOFF_BASE_MS * 2 ** Math.max(0, this.connectAttempts - 1),
    );
    this.hooks.schedule(() => this.connect(), delay);
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.onStatus?.(status);
  }

  private markGap(): void {
    const last = this.history[this.history.length - 1];
    if (last && !last.gap) this.history.push({ frame: null, gap: true });
  }

  private handleMessage(text: string): void {
    const msg = JSON.parse(text) as TelemetryMessage;
    if (msg.kind === "snapshot") {
      this.snapshot = msg;
      this.connectAttempts = 0; // healthy subscription resets the backoff
      if (msg.frame) this.pushFrame(msg.frame);
      this.onSnapshot?.(msg);
    } else if (msg.kind === "frame") {
      this.pushFrame(msg.frame);
    }
  }

  private pushFrame(frame: TelemetryFrame): void {
    this.latest = frame;
    this.history.push({ frame, gap: false });
    if (this.history.length > HISTORY_LIMIT) {
      this.history.splice(0, this.history.length - HISTORY_LIMIT);
    }
    this.onFrame?.(frame);
  }

  async sendCommand(envelope: CommandEnvelope): Promise<CommandAck> {
    this.requestCounter += 1;
    const body = JSON.stringify({
      ...envelope,
      request_id: envelope.request_id ?? `console-${this.requestCounter}`,
    });
    const resp = await this.hooks.fetchFn(`${this.endpoint}/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return (await resp.json()) as CommandAck;
  }

  /** Heading accepted in degrees from the dial; normalized before sending. */
  async sendSetpoint(x: number, y: number, headingDeg: number): Promise<CommandAck> {
    const psi = wrapRad(degToRad(normalizeHeadingDeg(headingDeg)));
    return this.sendCommand({
      kind: "set_setpoint",
      payload: { x, y, psi },
    });
  }

  async fetchParams(): Promise<SnapshotMessage> {
    const resp = await this.hooks.fetchFn(`${this.endpoint}/params`);
    return (await resp.json()) as SnapshotMessage;
  }
}
