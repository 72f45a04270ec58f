/**
 * Dashboard rendering. Scene construction is pure (testable without a DOM);
 * painting targets the small Canvas2D subset declared below, so tests can
 * drive it with a recording stub. The map is north-up: +north is screen-up,
 * +east is screen-right, heading 0 points up.
 */

import type { LayoutInfo, TelemetryFrame } from "./types.js";
import type { HistoryEntry } from "./session.js";

export interface Canvas2DLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  font: string;
}

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface TrackPoint {
  px: number;
  py: number;
  gap: boolean;
}

export interface MapScene {
  track: TrackPoint[];
  vessel: { px: number; py: number; headingRad: number } | null;
  target: { px: number; py: number } | null;
  metersPerPixel: number;
  /** world coords of the viewport center (north, east) */
  center: [number, number];
}

export interface ThrusterBar {
  name: string;
  kind: string;
  thrustKn: number;
  /** |u| / u_max in [0, 1] */
  fraction: number;
  angleRad: number;
}

/** Screen mapping shared by scene building and input handling. */
export function worldToScreen(
  north: number, east: number,
  center: [number, number], metersPerPixel: number, view: Viewport,
): [number, number] {
  const px = view.width / 2 + (east - center[1]) / metersPerPixel;
  const py = view.height / 2 - (north - center[0]) / metersPerPixel;
  return [px, py];
}

export function screenToWorld(
  px: number, py: number,
  center: [number, number], metersPerPixel: number, view: Viewport,
): [number, number] {
  const east = center[1] + (px - view.width / 2) * metersPerPixel;
  const north = center[0] - (py - view.height / 2) * metersPerPixel;
  return [north, east];
}

export function buildMapScene(history: HistoryEntry[], view: Viewport): MapScene {
  const frames = history.filter((h) => h.frame !== null).map((h) => h.frame!);
  if (!frames.length) {
    return { track: [], vessel: null, target: null, metersPerPixel: 1, center: [0, 0] };
  }
  const xs = frames.map((f) => f.eta[0]).concat(frames.map((f) => f.setpoint[0]));
  const ys = frames.map((f) => f.eta[1]).concat(frames.map((f) => f.setpoint[1]));
  const cx = (Math.min(...xs) + Math.max(...xs)) / 2;
  const cy = (Math.min(...ys) + Math.max(...ys)) / 2;
  const spanX = Math.max(...xs) - Math.min(...xs);
  const spanY = Math.max(...ys) - Math.min(...ys);
  const usable = Math.min(view.width, view.height) - 2 * view.margin;
  const metersPerPixel = Math.max(Math.max(spanX, spanY, 1.0) / usable, 1e-6);
  const center: [number, number] = [cx, cy];

  const track: TrackPoint[] = [];
  for (const entry of history) {
    if (entry.frame === null) {
      track.push({ px: NaN, py: NaN, gap: true });
      continue;
    }
    const [px, py] = worldToScreen(
      entry.frame.eta[0], entry.frame.eta[1], center, metersPerPixel, view,
    );
    track.push({ px, py, gap: false });
  }

  const last = frames[frames.length - 1];
  const [vx, vy] = worldToScreen(last.eta[0], last.eta[1], center, metersPerPixel, view);
  const [tx, ty] = worldToScreen(
    last.setpoint[0], last.setpoint[1], center, metersPerPixel, view,
  );
  return {
    track,
    vessel: { px: vx, py: vy, headingRad: last.eta[5] },
    target: { px: tx, py: ty },
    metersPerPixel,
    center,
  };
}

export function buildThrusterBars(
  frame: TelemetryFrame, layout: LayoutInfo,
): ThrusterBar[] {
  return layout.names.map((name, i) => ({
    name,
    kind: layout.kinds[i],
    thrustKn: frame.u[i],
    fraction: Math.min(Math.abs(frame.u[i]) / layout.u_max[i], 1.0),
    angleRad: frame.alpha[i],
  }));
}

export interface SeriesScene {
  t: number[];
  actual: number[];
  reference: number[];
  label: string;
}

export function buildTimeSeries(
  history: HistoryEntry[], axis: 0 | 1 | 2,
): SeriesScene {
  const labels = ["north x [m]", "east y [m]", "heading psi [deg]"];
  const t: number[] = [];
  const actual: number[] = [];
  const reference: number[] = [];
  for (const entry of history) {
    if (entry.frame === null) {
      t.push(NaN);
      actual.push(NaN);
      reference.push(NaN);
      continue;
    }
    const f = entry.frame;
    t.push(f.t);
    if (axis === 2) {
      actual.push((f.eta[5] * 180) / Math.PI);
      reference.push((f.eta_d[2] * 180) / Math.PI);
    } else {
      actual.push(f.eta[axis]);
      reference.push(f.eta_d[axis]);
    }
  }
  return { t, actual, reference, label: labels[axis] };
}

// ---------------------------------------------------------------- painting

export function drawMap(ctx: Canvas2DLike, scene: MapScene, view: Viewport): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.strokeStyle = "#3a7";
  ctx.lineWidth = 1;
  ctx.beginPath();
  let pen = false;
  for (const p of scene.track) {
    if (p.gap) {
      pen = false;
      continue;
    }
    if (pen) ctx.lineTo(p.px, p.py);
    else ctx.moveTo(p.px, p.py);
    pen = true;
  }
  ctx.stroke();

  if (scene.target) {
    ctx.strokeStyle = "#d80";
    ctx.strokeRect(scene.target.px - 4, scene.target.py - 4, 8, 8);
  }
  if (scene.vessel) {
    const { px, py, headingRad } = scene.vessel;
    const len = 12;
    const dx = Math.sin(headingRad) * len;  // heading 0 = north = up
    const dy = -Math.cos(headingRad) * len;
    ctx.strokeStyle = "#fff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + dx, py + dy);
    ctx.stroke();
    ctx.fillStyle = "#fff";
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawThrusterPanel(
  ctx: Canvas2DLike, bars: ThrusterBar[], view: Viewport,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  const rowH = view.height / Math.max(bars.length, 1);
  bars.forEach((bar, i) => {
    const y = i * rowH + 4;
    const barW = (view.width - 120) * bar.fraction;
    ctx.fillStyle = bar.fraction > 0.9 ? "#d33" : "#39d";
    ctx.fillRect(90, y, barW, rowH - 14);
    ctx.strokeStyle = "#888";
    ctx.strokeRect(90, y, view.width - 120, rowH - 14);
    ctx.fillStyle = "#ddd";
    ctx.font = "11px monospace";
    ctx.fillText(
      `${bar.name} ${bar.thrustKn.toFixed(1)} kN (${(bar.fraction * 100).toFixed(0)}%)`,
      4, y + rowH / 2,
    );
    if (bar.kind === "azimuth") {
      const cx = view.width - 16;
      const cy = y + (rowH - 14) / 2;
      ctx.strokeStyle = "#aaa";
      ctx.beginPath();
      ctx.arc(cx, cy, 8, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(cx, cy);
      ctx.lineTo(cx + 8 * Math.cos(bar.angleRad), cy + 8 * Math.sin(bar.angleRad));
      ctx.stroke();
    }
  });
}
