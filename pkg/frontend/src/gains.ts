/**
 * Editable gain form: one row per PID axis, bounds from the declared
 * manifest, dirty tracking, and a single batched apply. The form only
 * flips to "applied" when the ack's parameter version shows up.
 */

import type { CommandAck, CommandEnvelope, SnapshotMessage } from "./types.js";

export interface GainField {
  name: string;
  value: number;
  edited: number | null;
  lo: number;
  hi: number;
}

export const GAIN_NAMES = [
  "pid.kp.x", "pid.kp.y", "pid.kp.psi",
  "pid.ki.x", "pid.ki.y", "pid.ki.psi",
  "pid.kd.x", "pid.kd.y", "pid.kd.psi",
];

export class GainForm {
  fields = new Map<string, GainField>();
  appliedVersion = 0;
  pendingVersion: number | null = null;

  syncFromSnapshot(snap: SnapshotMessage): void {
    for (const name of GAIN_NAMES) {
      const bounds = snap.bounds[name] ?? [-Infinity, Infinity];
      const existing = this.fields.get(name);
      this.fields.set(name, {
        name,
        value: snap.params[name],
        edited: existing?.edited ?? null,
        lo: bounds[0],
        hi: bounds[1],
      });
    }
    this.appliedVersion = snap.version;
  }

  edit(name: string, value: number): string | null {
    const field = this.fields.get(name);
    if (!field) return `unknown gain ${name}`;
    if (!Number.isFinite(value)) return `${name}: not a number`;
    if (value < field.lo || value > field.hi) {
      return `${name}: ${value} outside [${field.lo}, ${field.hi}]`;
    }
    field.edited = value === field.value ? null : value;
    return null;
  }

  get dirty(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const field of this.fields.values()) {
      if (field.edited !== null) out[field.name] = field.edited;
    }
    return out;
  }

  get isDirty(): boolean {
    return Object.keys(this.dirty).length > 0;
  }

  /** One set_param batch covering every edited field. */
  buildApply(): CommandEnvelope | null {
    if (!this.isDirty) return null;
    return { kind: "set_param", payload: this.dirty };
  }

  /** Record the ack; the form flips to applied when telemetry confirms. */
  handleAck(ack: CommandAck): void {
    if (!ack.ok || ack.version === undefined) return;
    this.pendingVersion = ack.version;
    for (const field of this.fields.values()) {
      if (field.edited !== null) {
        field.value = field.edited;
        field.edited = null;
      }
    }
  }

  /** Feed telemetry param versions; returns true when the edit is live. */
  observeVersion(version: number): boolean {
    if (this.pendingVersion !== null && version >= this.pendingVersion) {
      this.appliedVersion = this.pendingVersion;
      this.pendingVersion = null;
    }
    return this.pendingVersion === null;
  }
}
