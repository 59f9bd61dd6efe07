/**
 * Log-log convergence figures from run CSVs.
 *
 * A figure is a grid of panels; each panel draws one or more quantities of
 * one or more runs against ndof or cumulative ndof. Reference slopes from
 * the spec are drawn as rate triangles; nothing is fitted here.
 */

import { readFileSync } from "fs";
import { RunTable, CsvError, parseRunCsv, requireColumn } from "./csv";
import { decadeTicks, makeLogScale, padLog, tickLabel } from "./scale";
import { MARKERS, PALETTE, escapeText, marker, polyline, svgDocument, tag } from "./svg";

export interface SlopeSpec {
  rate: number;
  label?: string;
}

export interface InputSpec {
  csv: string;
  label?: string;
}

export interface PanelSpec {
  title?: string;
  inputs: InputSpec[];
  quantities: string[];
  x: "ndof" | "cumndof";
  slopes?: SlopeSpec[];
}

export interface PlotSpec {
  output: string;
  panels: PanelSpec[];
  layout?: [number, number];
  width?: number;
  height?: number;
}

export class SpecError extends Error {}

const PANEL_W = 430;
const PANEL_H = 360;
const MARGIN = { left: 62, right: 16, top: 34, bottom: 46 };

interface Series {
  label: string;
  color: string;
  shape: (typeof MARKERS)[number];
  points: Array<[number, number]>;
}

export function validateSpec(spec: unknown): PlotSpec {
  if (typeof spec !== "object" || spec === null) {
    throw new SpecError("plot spec must be an object");
  }
  const s = spec as Record<string, unknown>;
  if (typeof s.output !== "string" || !s.output.length) {
    throw new SpecError("plot spec needs an output path");
  }
  if (!Array.isArray(s.panels) || s.panels.length === 0) {
    throw new SpecError("plot spec needs at least one panel");
  }
  for (const panel of s.panels as Array<Record<string, unknown>>) {
    if (!Array.isArray(panel.inputs) || panel.inputs.length === 0) {
      throw new SpecError("every panel needs at least one input CSV");
    }
    if (!Array.isArray(panel.quantities) || panel.quantities.length === 0) {
      throw new SpecError("every panel needs at least one quantity");
    }
    if (panel.x !== "ndof" && panel.x !== "cumndof") {
      throw new SpecError(`panel x axis must be "ndof" or "cumndof", got `
        + `${JSON.stringify(panel.x)}`);
    }
  }
  return spec as PlotSpec;
}

function seriesColor(quantity: string, seriesIndex: number): string {
  // goal estimators and goal values keep a stable color per goal index
  const match = /^(?:zeta|goal)_(\d+)$/.exec(quantity);
  if (match) {
    return PALETTE[(Number(match[1]) - 1) % PALETTE.length];
  }
  if (quantity === "eta") {
    return "#000000";
  }
  return PALETTE[seriesIndex % PALETTE.length];
}

function collectSeries(panel: PanelSpec, tables: Map<string, RunTable>): Series[] {
  const series: Series[] = [];
  let index = 0;
  for (const input of panel.inputs) {
    const table = tables.get(input.csv)!;
    const xs = requireColumn(table, panel.x, input.csv);
    for (const quantity of panel.quantities) {
      const ys = requireColumn(table, quantity, input.csv);
      const points: Array<[number, number]> = [];
      for (let i = 0; i < xs.length; i += 1) {
        if (xs[i] > 0 && ys[i] > 0) {
          points.push([xs[i], ys[i]]);
        }
      }
      const label = input.label !== undefined && panel.quantities.length === 1
        ? input.label
        : input.label !== undefined
          ? `${input.label} ${quantity}`
          : quantity;
      series.push({
        label,
        color: seriesColor(quantity, index),
        shape: MARKERS[index % MARKERS.length],
        points,
      });
      index += 1;
    }
  }
  return series;
}

function rateTriangle(rate: number, label: string | undefined,
  bounds: { x: [number, number]; y: [number, number] },
  scaleX: ReturnType<typeof makeLogScale>,
  scaleY: ReturnType<typeof makeLogScale>): string[] {
  // anchored near the lower right of the data, spanning 0.8 decades in x
  const decades = 0.8;
  const x1 = bounds.x[1];
  const x0 = x1 / Math.pow(10, decades);
  const anchorY = bounds.y[0] * 1.6;
  const y0 = anchorY;
  const y1 = anchorY * Math.pow(Math.pow(10, decades), rate);
  // rate < 0: hypotenuse falls; draw the right angle at the low corner
  const px0 = scaleX.map(x0);
  const px1 = scaleX.map(x1);
  const py0 = scaleY.map(y0);
  const py1 = scaleY.map(y1);
  const parts = [
    polyline([[px0, py0], [px1, py0], [px1, py1], [px0, py0]],
      { stroke: "#555555", "stroke-width": 1, "stroke-dasharray": "none" }),
    tag("text", {
      x: (px0 + px1) / 2, y: py0 + 12, "font-size": 10,
      "text-anchor": "middle", fill: "#555555",
    }, "1"),
    tag("text", {
      x: px1 + 4, y: (py0 + py1) / 2 + 3, "font-size": 10,
      "text-anchor": "start", fill: "#555555",
    }, escapeText(String(Math.abs(rate)))),
  ];
  if (label) {
    parts.push(tag("text", {
      x: px0 - 4, y: py1 - 4, "font-size": 10,
      "text-anchor": "start", fill: "#555555",
    }, escapeText(label)));
  }
  return parts;
}

function renderPanel(panel: PanelSpec, tables: Map<string, RunTable>,
  originX: number, originY: number): string[] {
  const series = collectSeries(panel, tables);
  const allPoints = series.flatMap((s) => s.points);
  if (allPoints.length === 0) {
    throw new SpecError("panel has no positive data points to draw");
  }
  const xs = allPoints.map(([x]) => x);
  const ys = allPoints.map(([, y]) => y);
  const xDomain = padLog(Math.min(...xs), Math.max(...xs), 1.15);
  const yDomain = padLog(Math.min(...ys), Math.max(...ys), 1.5);
  const left = originX + MARGIN.left;
  const right = originX + PANEL_W - MARGIN.right;
  const top = originY + MARGIN.top;
  const bottom = originY + PANEL_H - MARGIN.bottom;
  const scaleX = makeLogScale(xDomain, [left, right]);
  const scaleY = makeLogScale(yDomain, [bottom, top]);

  const body: string[] = [];
  body.push(tag("rect", {
    x: left, y: top, width: right - left, height: bottom - top,
    fill: "#ffffff", stroke: "#222222", "stroke-width": 1,
  }));
  for (const tick of decadeTicks(xDomain[0], xDomain[1])) {
    const px = scaleX.map(tick);
    body.push(polyline([[px, bottom], [px, top]],
      { stroke: "#dddddd", "stroke-width": 0.6 }));
    body.push(tag("text", {
      x: px, y: bottom + 16, "font-size": 10, "text-anchor": "middle",
    }, tickLabel(tick)));
  }
  for (const tick of decadeTicks(yDomain[0], yDomain[1])) {
    const py = scaleY.map(tick);
    body.push(polyline([[left, py], [right, py]],
      { stroke: "#dddddd", "stroke-width": 0.6 }));
    body.push(tag("text", {
      x: left - 6, y: py + 3, "font-size": 10, "text-anchor": "end",
    }, tickLabel(tick)));
  }
  body.push(tag("text", {
    x: (left + right) / 2, y: bottom + 34, "font-size": 11, "text-anchor": "middle",
  }, escapeText(panel.x === "ndof" ? "degrees of freedom"
    : "cumulative degrees of freedom")));
  if (panel.title) {
    body.push(tag("text", {
      x: (left + right) / 2, y: top - 10, "font-size": 12,
      "text-anchor": "middle", "font-weight": "bold",
    }, escapeText(panel.title)));
  }

  series.forEach((s) => {
    const mapped = s.points.map(([x, y]) =>
      [scaleX.map(x), scaleY.map(y)] as [number, number]);
    body.push(polyline(mapped, { stroke: s.color, "stroke-width": 1.3 }));
    const step = Math.max(1, Math.floor(mapped.length / 25));
    mapped.forEach((point, i) => {
      if (i % step === 0 || i === mapped.length - 1) {
        body.push(marker(s.shape, point[0], point[1], 4.5, s.color));
      }
    });
  });

  for (const slope of panel.slopes ?? []) {
    body.push(...rateTriangle(slope.rate, slope.label,
      { x: [Math.min(...xs), Math.max(...xs)], y: [Math.min(...ys), Math.max(...ys)] },
      scaleX, scaleY));
  }

  // legend, top-right corner of the panel
  series.forEach((s, i) => {
    const lx = right - 120;
    const ly = top + 14 + 14 * i;
    body.push(marker(s.shape, lx, ly - 3, 5, s.color));
    body.push(tag("text", { x: lx + 9, y: ly, "font-size": 10 }, escapeText(s.label)));
  });
  return body;
}

export function renderFigure(spec: PlotSpec): string {
  validateSpec(spec);
  const tables = new Map<string, RunTable>();
  for (const panel of spec.panels) {
    for (const input of panel.inputs) {
      if (!tables.has(input.csv)) {
        const text = readFileSync(input.csv, "utf-8");
        tables.set(input.csv, parseRunCsv(text, input.csv));
      }
    }
    // fail before any drawing if a quantity is missing
    for (const input of panel.inputs) {
      const table = tables.get(input.csv)!;
      requireColumn(table, panel.x, input.csv);
      for (const quantity of panel.quantities) {
        requireColumn(table, quantity, input.csv);
      }
    }
  }
  const n = spec.panels.length;
  const [rows, cols] = spec.layout ?? [1, n];
  if (rows * cols < n) {
    throw new SpecError(`layout ${rows}x${cols} cannot hold ${n} panels`);
  }
  const body: string[] = [];
  spec.panels.forEach((panel, i) => {
    const r = Math.floor(i / cols);
    const c = i % cols;
    body.push(...renderPanel(panel, tables, c * PANEL_W, r * PANEL_H));
  });
  return svgDocument(cols * PANEL_W, rows * PANEL_H, body);
}

export { CsvError };
