/**
 * Replay source: turns a harness time-series/trajectory CSV into the same
 * TelemetryFrame stream a live session produces, so one renderer serves
 * both. The CSV format is the harness's own: a header row of column names,
 * then unquoted comma-separated floats.
 */

import type { TelemetryFrame } from "./types.js";

export function parseCsv(text: string): { columns: string[]; rows: number[][] } {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) throw new Error("CSV needs a header and at least one row");
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const vals = line.split(",").map(Number);
    if (vals.length !== columns.length || vals.some(Number.isNaN)) {
      throw new Error(`CSV row ${i + 2} malformed`);
    }
    return vals;
  });
  return { columns, rows };
}

export function framesFromCsv(text: string): TelemetryFrame[] {
  const { columns, rows } = parseCsv(text);
  const col = (name: string) => {
    const i = columns.indexOf(name);
    if (i < 0) throw new Error(`CSV missing column ${name}`);
    return i;
  };
  const etaIdx = ["eta_x", "eta_y", "eta_z", "eta_phi", "eta_theta", "eta_psi"].map(col);
  const nuIdx = ["nu_u", "nu_v", "nu_w", "nu_p", "nu_q", "nu_r"].map(col);
  const refIdx = ["refx", "refy", "refpsi"].map(col);
  const tauIdx = ["taupid_x", "taupid_y", "taupid_n"].map(col);
  const sIdx = ["s_x", "s_y", "s_n"].map(col);
  const uIdx: number[] = [];
  const alphaIdx: number[] = [];
  for (let i = 1; columns.includes(`u_${i}`); i++) {
    uIdx.push(col(`u_${i}`));
    alphaIdx.push(col(`alpha_${i}`));
  }
  const tIdx = col("t");

  return rows.map((row, k) => ({
    t: row[tIdx],
    step: k + 1,
    eta: etaIdx.map((i) => row[i]),
    nu: nuIdx.map((i) => row[i]),
    eta_d: refIdx.map((i) => row[i]),
    setpoint: refIdx.map((i) => row[i]),
    tau_pid: tauIdx.map((i) => row[i]),
    u: uIdx.map((i) => row[i]),
    alpha: alphaIdx.map((i) => row[i]),
    s: sIdx.map((i) => row[i]),
    env: {},
    param_version: 0,
  }));
}
