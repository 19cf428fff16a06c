/**
 * Deterministic SVG rendering of dbar(t) curve panels.
 *
 * One panel per (dataset group, kernel) pair, one line per remaining label
 * segment (typically the sample size), a shaded +/-2 s.e. band per line, and
 * a dashed reference line at the target TV level. No timestamps, no
 * randomness: the same inputs always produce the same bytes.
 */

import type { CurveFile } from "./curves.js";

const KERNELS = new Set(["da", "cg", "da_mod", "da_marginal"]);
const PALETTE = ["#1f6feb", "#d23f31", "#1a7f37", "#9a3fd2", "#b07d10", "#0d7d8c"];

interface Panel {
  title: string;
  lines: { key: string; curve: CurveFile }[];
}

function naturalCompare(a: string, b: string): number {
  const re = /(\d+(?:\.\d+)?)|(\D+)/g;
  const as = a.match(re) ?? [];
  const bs = b.match(re) ?? [];
  for (let i = 0; i < Math.max(as.length, bs.length); i++) {
    const x = as[i];
    const y = bs[i];
    if (x === undefined) return -1;
    if (y === undefined) return 1;
    const nx = Number(x);
    const ny = Number(y);
    const bothNumeric = !Number.isNaN(nx) && !Number.isNaN(ny);
    const cmp = bothNumeric ? nx - ny : x.localeCompare(y);
    if (cmp !== 0) return cmp < 0 ? -1 : 1;
  }
  return 0;
}

export function groupPanels(curves: CurveFile[]): Panel[] {
  const byPanel = new Map<string, Panel>();
  for (const curve of curves) {
    const kernelIdx = curve.segments.findIndex((s) => KERNELS.has(s));
    if (kernelIdx < 0) {
      throw new Error(`${curve.path}: no kernel segment in ${curve.segments.join("/")}`);
    }
    const group = curve.segments.slice(0, kernelIdx).join("/");
    const kernel = curve.segments[kernelIdx];
    const key = curve.segments.slice(kernelIdx + 1).join("/") || kernel;
    const title = group ? `${group} / ${kernel}` : kernel;
    let panel = byPanel.get(title);
    if (panel === undefined) {
      panel = { title, lines: [] };
      byPanel.set(title, panel);
    }
    panel.lines.push({ key, curve });
  }
  const panels = [...byPanel.values()];
  panels.sort((a, b) => naturalCompare(a.title, b.title));
  for (const panel of panels) {
    panel.lines.sort((a, b) => naturalCompare(a.key, b.key));
  }
  return panels;
}

const fmt = (x: number): string => (Math.round(x * 100) / 100).toFixed(2);

interface Geometry {
  x0: number;
  y0: number;
  w: number;
  h: number;
  tMax: number;
  yMax: number;
}

function sx(g: Geometry, t: number): number {
  return g.x0 + (g.w * (t - 1)) / Math.max(g.tMax - 1, 1);
}

function sy(g: Geometry, v: number): number {
  return g.y0 + g.h - (g.h * Math.min(v, g.yMax)) / g.yMax;
}

function renderPanel(panel: Panel, g: Geometry, epsilon: number): string {
  const parts: string[] = [];
  parts.push(
    `<rect x="${fmt(g.x0)}" y="${fmt(g.y0)}" width="${fmt(g.w)}" height="${fmt(g.h)}" fill="none" stroke="#444" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${fmt(g.x0 + g.w / 2)}" y="${fmt(g.y0 - 8)}" text-anchor="middle" font-size="13" font-family="sans-serif">${panel.title}</text>`,
  );
  // axis ticks: 5 on x, 5 on y
  for (let k = 0; k <= 4; k++) {
    const t = 1 + ((g.tMax - 1) * k) / 4;
    const x = sx(g, t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${fmt(g.y0 + g.h)}" x2="${fmt(x)}" y2="${fmt(g.y0 + g.h + 4)}" stroke="#444"/>`,
      `<text x="${fmt(x)}" y="${fmt(g.y0 + g.h + 16)}" text-anchor="middle" font-size="10" font-family="sans-serif">${Math.round(t)}</text>`,
    );
    const v = (g.yMax * k) / 4;
    const y = sy(g, v);
    parts.push(
      `<line x1="${fmt(g.x0 - 4)}" y1="${fmt(y)}" x2="${fmt(g.x0)}" y2="${fmt(y)}" stroke="#444"/>`,
      `<text x="${fmt(g.x0 - 6)}" y="${fmt(y + 3)}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(v)}</text>`,
    );
  }
  // epsilon reference line
  const yEps = sy(g, epsilon);
  parts.push(
    `<line x1="${fmt(g.x0)}" y1="${fmt(yEps)}" x2="${fmt(g.x0 + g.w)}" y2="${fmt(yEps)}" stroke="#777" stroke-dasharray="5,4" stroke-width="1"/>`,
  );
  panel.lines.forEach((line, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = line.curve.points;
    const upper = pts.map((p) => `${fmt(sx(g, p.t))},${fmt(sy(g, p.dbar + 2 * p.se))}`);
    const lower = pts
      .slice()
      .reverse()
      .map((p) => `${fmt(sx(g, p.t))},${fmt(sy(g, Math.max(p.dbar - 2 * p.se, 0)))}`);
    parts.push(
      `<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" fill-opacity="0.15" stroke="none"/>`,
    );
    const path = pts.map((p) => `${fmt(sx(g, p.t))},${fmt(sy(g, p.dbar))}`).join(" ");
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
    );
    const ly = g.y0 + 14 + 13 * idx;
    parts.push(
      `<line x1="${fmt(g.x0 + g.w - 52)}" y1="${fmt(ly - 3)}" x2="${fmt(g.x0 + g.w - 38)}" y2="${fmt(ly - 3)}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${fmt(g.x0 + g.w - 34)}" y="${fmt(ly)}" font-size="10" font-family="sans-serif">${line.key}</text>`,
    );
  });
  return parts.join("\n");
}

export interface FigureOptions {
  epsilon?: number;
  panelWidth?: number;
  panelHeight?: number;
  columns?: number;
}

export function renderFigure(curves: CurveFile[], options: FigureOptions = {}): string {
  if (curves.length === 0) {
    throw new Error("no curve files given");
  }
  const epsilon = options.epsilon ?? 0.1;
  const pw = options.panelWidth ?? 360;
  const ph = options.panelHeight ?? 240;
  const columns = options.columns ?? 2;
  const margin = { left: 56, right: 18, top: 34, bottom: 40 };
  const panels = groupPanels(curves);
  const rows = Math.ceil(panels.length / columns);
  const width = columns * (pw + margin.left + margin.right);
  const height = rows * (ph + margin.top + margin.bottom);
  const body = panels.map((panel, idx) => {
    const col = idx % columns;
    const row = Math.floor(idx / columns);
    const tMax = Math.max(...panel.lines.map((l) => l.curve.points[l.curve.points.length - 1].t));
    const yMax = Math.max(
      0.5,
      ...panel.lines.map((l) => Math.max(...l.curve.points.map((p) => p.dbar + 2 * p.se))),
    );
    const g: Geometry = {
      x0: margin.left + col * (pw + margin.left + margin.right),
      y0: margin.top + row * (ph + margin.top + margin.bottom),
      w: pw,
      h: ph,
      tMax,
      yMax,
    };
    return renderPanel(panel, g, epsilon);
  });
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
