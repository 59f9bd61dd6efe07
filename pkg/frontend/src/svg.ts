/** Minimal deterministic SVG string builder. */

export type Attrs = Record<string, string | number>;

function fmtNumber(value: number): string {
  // fixed precision keeps output byte-stable across runs
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function fmt(value: string | number): string {
  return typeof value === "number" ? fmtNumber(value) : value;
}

export function tag(name: string, attrs: Attrs, body?: string): string {
  const parts = Object.entries(attrs)
    .map(([key, value]) => `${key}="${fmt(value)}"`)
    .join(" ");
  const open = parts.length ? `<${name} ${parts}` : `<${name}`;
  return body === undefined ? `${open}/>` : `${open}>${body}</${name}>`;
}

export function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function polyline(points: Array<[number, number]>, attrs: Attrs): string {
  const coords = points.map(([x, y]) => `${fmtNumber(x)},${fmtNumber(y)}`).join(" ");
  return tag("polyline", { points: coords, fill: "none", ...attrs });
}

export function svgDocument(width: number, height: number, body: string[]): string {
  const head = `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" `
    + `height="${height}" viewBox="0 0 ${width} ${height}" `
    + `font-family="Helvetica, Arial, sans-serif">`;
  return [head, ...body, "</svg>", ""].join("\n");
}

/** Fixed palette; series beyond the palette wrap around. */
export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

export const MARKERS = ["circle", "square", "diamond", "triangle"] as const;
export type MarkerShape = (typeof MARKERS)[number];

export function marker(shape: MarkerShape, x: number, y: number, size: number,
  color: string): string {
  const h = size / 2;
  switch (shape) {
    case "circle":
      return tag("circle", { cx: x, cy: y, r: h, fill: color });
    case "square":
      return tag("rect", { x: x - h, y: y - h, width: size, height: size, fill: color });
    case "diamond":
      return polygonMarker([[x, y - h], [x + h, y], [x, y + h], [x - h, y]], color);
    case "triangle":
      return polygonMarker([[x, y - h], [x + h, y + h], [x - h, y + h]], color);
  }
}

function polygonMarker(points: Array<[number, number]>, color: string): string {
  const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return tag("polygon", { points: coords, fill: color });
}
