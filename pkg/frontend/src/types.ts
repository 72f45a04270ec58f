/** Wire shapes of the station service (JSON over WebSocket + HTTP). */

export interface TelemetryFrame {
  t: number;
  step: number;
  eta: number[];        // x, y, z, phi, theta, psi (m, rad)
  nu: number[];         // u, v, w, p, q, r
  eta_d: number[];      // reference x, y, psi
  setpoint: number[];   // commanded x, y, psi
  tau_pid: number[];    // kN, kN, kN m
  u: number[];          // per-thruster thrust, kN
  alpha: number[];      // per-thruster angle, rad
  s: number[];          // allocation slack
  env: Record<string, number>;
  param_version: number;
}

export interface LayoutInfo {
  names: string[];
  kinds: string[];
  u_max: number[];
}

export interface SnapshotMessage {
  kind: "snapshot";
  phase: string;
  params: Record<string, number>;
  slots: Record<string, string>;
  version: number;
  bounds: Record<string, [number, number]>;
  layout: LayoutInfo;
  frame: TelemetryFrame | null;
}

export interface FrameMessage {
  kind: "frame";
  frame: TelemetryFrame;
}

export type TelemetryMessage = SnapshotMessage | FrameMessage;

export interface CommandEnvelope {
  kind: "set_setpoint" | "set_param" | "switch_algorithm" | "start" | "stop";
  payload?: Record<string, unknown>;
  request_id?: string;
}

export interface CommandAck {
  ok: boolean;
  applied_step?: number;
  version?: number;
  error?: string;
  detail?: string;
}
