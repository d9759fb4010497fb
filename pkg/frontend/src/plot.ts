import { aggregateRows, parseResultsCsv, toNumber, type RawRow } from "./csv.js";
import { figureSpec, seriesOrder, type FigureSpec } from "./figures.js";
import { linearScale } from "./scale.js";

export interface SeriesPoint {
  x: number;
  y: number;
  /** Raw CSV strings, echoed into the SVG so plotted values are auditable. */
  rawX: string;
  rawY: string;
}

export interface Series {
  key: string;
  label: string;
  points: SeriesPoint[];
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const px = (value: number): string => value.toFixed(2);

function tickLabel(value: number): string {
  return Number(value.toFixed(6)).toString();
}

/** Group aggregate rows into sorted per-series point lists. */
export function buildSeries(rows: RawRow[], spec: FigureSpec): Series[] {
  const groups = new Map<string, SeriesPoint[]>();
  for (const row of rows) {
    const key = row[spec.seriesKey] ?? "";
    const rawX = row[spec.xKey] ?? "";
    const rawY = row[spec.yKey] ?? "";
    const point = { x: toNumber(rawX), y: toNumber(rawY), rawX, rawY };
    if (!Number.isFinite(point.x) || !Number.isFinite(point.y)) continue;
    const list = groups.get(key);
    if (list) list.push(point);
    else groups.set(key, [point]);
  }
  const series = seriesOrder([...groups.keys()]).map((key) => ({
    key,
    label: spec.seriesLabel(key),
    points: groups.get(key)!.sort((a, b) => a.x - b.x),
  }));
  const kept = series.filter((s) => s.points.length > 0);
  if (kept.length === 0) {
    throw new Error("no finite aggregate points to plot");
  }
  return kept;
}

export function renderSvg(series: Series[], spec: FigureSpec): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const x = linearScale(xs, [MARGIN.left, WIDTH - MARGIN.right]);
  const y = linearScale(ys, [HEIGHT - MARGIN.bottom, MARGIN.top]);

  const lines: string[] = [];
  lines.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  lines.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  lines.push(
    `<text x="${WIDTH / 2}" y="26" text-anchor="middle" font-size="16">${esc(spec.title)}</text>`,
  );

  // gridlines + ticks
  for (const tick of x.ticks) {
    const tx = px(x.map(tick));
    lines.push(
      `<line x1="${tx}" y1="${MARGIN.top}" x2="${tx}" y2="${HEIGHT - MARGIN.bottom}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
    );
    lines.push(
      `<text x="${tx}" y="${HEIGHT - MARGIN.bottom + 20}" text-anchor="middle" ` +
        `font-size="12">${tickLabel(tick)}</text>`,
    );
  }
  for (const tick of y.ticks) {
    const ty = px(y.map(tick));
    lines.push(
      `<line x1="${MARGIN.left}" y1="${ty}" x2="${WIDTH - MARGIN.right}" y2="${ty}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
    );
    lines.push(
      `<text x="${MARGIN.left - 8}" y="${ty}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="12">${tickLabel(tick)}</text>`,
    );
  }
  lines.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${WIDTH - MARGIN.left - MARGIN.right}" ` +
      `height="${HEIGHT - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#333333"/>`,
  );
  lines.push(
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 12}" ` +
      `text-anchor="middle" font-size="13">${esc(spec.xLabel)}</text>`,
  );
  lines.push(
    `<text x="20" y="${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2}" text-anchor="middle" ` +
      `font-size="13" transform="rotate(-90 20 ${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2})">` +
      `${esc(spec.yLabel)}</text>`,
  );

  series.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length]!;
    const path = s.points.map((p) => `${px(x.map(p.x))},${px(y.map(p.y))}`).join(" ");
    lines.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2" ` +
        `data-series="${esc(s.key)}"/>`,
    );
    for (const p of s.points) {
      lines.push(
        `<circle cx="${px(x.map(p.x))}" cy="${px(y.map(p.y))}" r="3.5" fill="${color}" ` +
          `data-series="${esc(s.key)}" data-x="${esc(p.rawX)}" data-y="${esc(p.rawY)}"/>`,
      );
    }
  });

  // legend, top-right inside the frame
  const legendX = WIDTH - MARGIN.right - 200;
  series.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length]!;
    const ly = MARGIN.top + 16 + index * 20;
    lines.push(
      `<line x1="${legendX}" y1="${ly}" x2="${legendX + 26}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    lines.push(
      `<text x="${legendX + 32}" y="${ly + 4}" font-size="12">${esc(s.label)}</text>`,
    );
  });

  lines.push("</svg>");
  return lines.join("\n") + "\n";
}

/** CSV text + figure id -> deterministic SVG markup. */
export function plotCsv(csvText: string, figureId: string): string {
  const spec = figureSpec(figureId);
  const rows = aggregateRows(parseResultsCsv(csvText));
  return renderSvg(buildSeries(rows, spec), spec);
}
