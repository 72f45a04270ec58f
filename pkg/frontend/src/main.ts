/**
 * Browser entry point: wires the session, gain form and renderer to the DOM.
 * Live telemetry and CSV replay feed the same rendering path; rendering is
 * throttled to animation frames regardless of telemetry rate.
 */

import { ConsoleSession, HistoryEntry } from "./session.js";
import { GainForm, GAIN_NAMES } from "./gains.js";
import { framesFromCsv } from "./replay.js";
import {
  buildMapScene,
  buildThrusterBars,
  buildTimeSeries,
  drawMap,
  drawThrusterPanel,
  screenToWorld,
  Canvas2DLike,
  Viewport,
} from "./render.js";
import { radToDeg } from "./angles.js";
import type { LayoutInfo, TelemetryFrame } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const endpoint = (window.location.hash.slice(1) || "http://127.0.0.1:8710");
const session = new ConsoleSession(endpoint);
const form = new GainForm();

const banner = el<HTMLDivElement>("banner");
const mapCanvas = el<HTMLCanvasElement>("map");
const thrusterCanvas = el<HTMLCanvasElement>("thrusters");
const readout = el<HTMLDivElement>("readout");
const gainTable = el<HTMLTableElement>("gains");
const applyBtn = el<HTMLButtonElement>("apply");
const applyState = el<HTMLSpanElement>("apply-state");
const headingInput = el<HTMLInputElement>("heading");
const replayInput = el<HTMLInputElement>("replay");
const modeBadge = el<HTMLSpanElement>("mode");

let layout: LayoutInfo | null = null;
let replayHistory: HistoryEntry[] | null = null;
let replayLatest: TelemetryFrame | null = null;
let dirtyScene = true;

const mapView: Viewport = { width: mapCanvas.width, height: mapCanvas.height, margin: 24 };
const thrView: Viewport = { width: thrusterCanvas.width, height: thrusterCanvas.height, margin: 4 };

session.onStatus = (status) => {
  banner.textContent = status === "connected"
    ? `connected to ${endpoint}`
    : status === "connecting"
      ? `connecting to ${endpoint} ...`
      : `disconnected from ${endpoint} - retrying`;
  banner.className = `banner ${status}`;
};

session.onSnapshot = (snap) => {
  layout = snap.layout;
  form.syncFromSnapshot(snap);
  renderGainTable();
  modeBadge.textContent = `phase: ${snap.phase}`;
  dirtyScene = true;
};

session.onFrame = (frame) => {
  if (form.observeVersion(frame.param_version)) {
    applyState.textContent = form.isDirty ? "edited" : "applied";
  }
  dirtyScene = true;
};

function activeHistory(): HistoryEntry[] {
  return replayHistory ?? session.history;
}

function activeLatest(): TelemetryFrame | null {
  return replayHistory ? replayLatest : session.latest;
}

function renderGainTable(): void {
  gainTable.innerHTML = "<tr><th>gain</th><th>value</th><th></th></tr>";
  for (const name of GAIN_NAMES) {
    const field = form.fields.get(name);
    if (!field) continue;
    const row = gainTable.insertRow();
    row.insertCell().textContent = name;
    const cell = row.insertCell();
    const input = document.createElement("input");
    input.type = "number";
    input.value = String(field.edited ?? field.value);
    input.addEventListener("change", () => {
      const err = form.edit(name, Number(input.value));
      state.textContent = err ?? (form.isDirty ? "edited" : "");
      applyState.textContent = form.isDirty ? "edited" : "applied";
    });
    cell.appendChild(input);
    const state = row.insertCell();
    state.textContent = "";
  }
}

applyBtn.addEventListener("click", async () => {
  const envelope = form.buildApply();
  if (!envelope) return;
  applyState.textContent = "applying...";
  const ack = await session.sendCommand(envelope);
  if (!ack.ok) {
    applyState.textContent = `rejected: ${ack.error} ${ack.detail ?? ""}`;
    return;
  }
  form.handleAck(ack);
  applyState.textContent = `acked @ step ${ack.applied_step}`;
});

mapCanvas.addEventListener("click", async (event) => {
  if (replayHistory) return; // replay is read-only
  const history = activeHistory();
  const scene = buildMapScene(history, mapView);
  if (!scene.vessel) return;
  const rect = mapCanvas.getBoundingClientRect();
  const [north, east] = screenToWorld(
    event.clientX - rect.left, event.clientY - rect.top,
    scene.center, scene.metersPerPixel, mapView,
  );
  const ack = await session.sendSetpoint(north, east, Number(headingInput.value));
  banner.textContent = ack.ok
    ? `setpoint (${north.toFixed(1)}, ${east.toFixed(1)}) acked @ step ${ack.applied_step}`
    : `setpoint rejected: ${ack.error} ${ack.detail ?? ""}`;
});

replayInput.addEventListener("change", async () => {
  const file = replayInput.files?.[0];
  if (!file) {
    replayHistory = null;
    replayLatest = null;
    modeBadge.textContent = "live";
    return;
  }
  const frames = framesFromCsv(await file.text());
  replayHistory = frames.map((frame) => ({ frame, gap: false }));
  replayLatest = frames[frames.length - 1] ?? null;
  modeBadge.textContent = `replay: ${file.name} (${frames.length} frames)`;
  dirtyScene = true;
});

function paint(): void {
  requestAnimationFrame(paint);
  if (!dirtyScene) return;
  dirtyScene = false;

  const history = activeHistory();
  const latest = activeLatest();
  const mapCtx = mapCanvas.getContext("2d") as unknown as Canvas2DLike;
  drawMap(mapCtx, buildMapScene(history, mapView), mapView);

  if (latest && layout) {
    const thrCtx = thrusterCanvas.getContext("2d") as unknown as Canvas2DLike;
    drawThrusterPanel(thrCtx, buildThrusterBars(latest, layout), thrView);
  }
  if (latest) {
    const psiDeg = radToDeg(latest.eta[5]);
    readout.textContent =
      `t=${latest.t.toFixed(1)}s  x=${latest.eta[0].toFixed(2)}m  ` +
      `y=${latest.eta[1].toFixed(2)}m  psi=${psiDeg.toFixed(1)}deg  ` +
      `ref=(${latest.eta_d[0].toFixed(2)}, ${latest.eta_d[1].toFixed(2)}, ` +
      `${radToDeg(latest.eta_d[2]).toFixed(1)}deg)  v${latest.param_version}`;
    for (const axis of [0, 1, 2] as const) {
      const canvas = el<HTMLCanvasElement>(`plot${axis}`);
      const series = buildTimeSeries(history, axis);
      drawSeries(canvas, series.t, series.actual, series.reference, series.label);
    }
  }
}

function drawSeries(
  canvas: HTMLCanvasElement, t: number[], a: number[], r: number[], label: string,
): void {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const finite = (vals: number[]) => vals.filter((v) => Number.isFinite(v));
  const tf = finite(t);
  if (tf.length < 2) return;
  const all = finite(a).concat(finite(r));
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const span = Math.max(hi - lo, 1e-6);
  const t0 = tf[0];
  const t1 = tf[tf.length - 1];
  const sx = (v: number) => ((v - t0) / Math.max(t1 - t0, 1e-9)) * (width - 8) + 4;
  const sy = (v: number) => height - 14 - ((v - lo) / span) * (height - 22);

  for (const [vals, color] of [[r, "#d80"], [a, "#3a7"]] as const) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < t.length; i++) {
      if (!Number.isFinite(t[i]) || !Number.isFinite(vals[i])) {
        pen = false;
        continue;
      }
      if (pen) ctx.lineTo(sx(t[i]), sy(vals[i]));
      else ctx.moveTo(sx(t[i]), sy(vals[i]));
      pen = true;
    }
    ctx.stroke();
  }
  ctx.fillStyle = "#bbb";
  ctx.font = "10px monospace";
  ctx.fillText(label, 6, height - 3);
}

session.connect();
requestAnimationFrame(paint);
