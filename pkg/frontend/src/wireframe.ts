/**
 * Optional mesh wireframe from the plain-text mesh dump
 * (VERTICES / ELEMENTS / BOUNDARY sections).
 */

import { polyline, svgDocument, tag } from "./svg";

export interface MeshDump {
  vertices: Array<[number, number]>;
  elements: Array<[number, number, number]>;
  boundary: Array<{ a: number; b: number; label: string }>;
}

export class MeshDumpError extends Error {}

export function parseMeshDump(text: string, source = "<mesh>"): MeshDump {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  const iv = lines.indexOf("VERTICES");
  const ie = lines.indexOf("ELEMENTS");
  const ib = lines.indexOf("BOUNDARY");
  if (iv !== 0 || ie < 0 || ib < 0 || !(iv < ie && ie < ib)) {
    throw new MeshDumpError(`${source}: expected VERTICES, ELEMENTS, BOUNDARY sections`);
  }
  const vertices = lines.slice(iv + 1, ie).map((line, i) => {
    const parts = line.split(/\s+/).map(Number);
    if (parts.length !== 2 || parts.some((x) => !Number.isFinite(x))) {
      throw new MeshDumpError(`${source}: bad vertex line ${i + 2}`);
    }
    return [parts[0], parts[1]] as [number, number];
  });
  const elements = lines.slice(ie + 1, ib).map((line, i) => {
    const parts = line.split(/\s+/);
    const ids = parts.slice(0, 3).map(Number);
    if (ids.some((x) => !Number.isInteger(x) || x < 0 || x >= vertices.length)) {
      throw new MeshDumpError(`${source}: bad element line ${i + 2}`);
    }
    return [ids[0], ids[1], ids[2]] as [number, number, number];
  });
  const boundary = lines.slice(ib + 1).map((line, i) => {
    const parts = line.split(/\s+/);
    const a = Number(parts[0]);
    const b = Number(parts[1]);
    if (!Number.isInteger(a) || !Number.isInteger(b) || parts.length < 3) {
      throw new MeshDumpError(`${source}: bad boundary line ${i + 2}`);
    }
    return { a, b, label: parts[2] };
  });
  return { vertices, elements, boundary };
}

export function renderWireframe(mesh: MeshDump, size = 480): string {
  const xs = mesh.vertices.map(([x]) => x);
  const ys = mesh.vertices.map(([, y]) => y);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const pad = 12;
  const scale = (size - 2 * pad) / Math.max(x1 - x0, y1 - y0, 1e-300);
  const px = (x: number) => pad + (x - x0) * scale;
  const py = (y: number) => size - pad - (y - y0) * scale;
  const body: string[] = [];
  for (const [a, b, c] of mesh.elements) {
    const pts = [a, b, c, a].map((v) =>
      [px(mesh.vertices[v][0]), py(mesh.vertices[v][1])] as [number, number]);
    body.push(polyline(pts, { stroke: "#777777", "stroke-width": 0.5 }));
  }
  for (const edge of mesh.boundary) {
    const color = edge.label === "dirichlet" ? "#d62728" : "#1f77b4";
    body.push(polyline([
      [px(mesh.vertices[edge.a][0]), py(mesh.vertices[edge.a][1])],
      [px(mesh.vertices[edge.b][0]), py(mesh.vertices[edge.b][1])],
    ], { stroke: color, "stroke-width": 1.6 }));
  }
  body.push(tag("text", { x: pad, y: 12, "font-size": 10 },
    `${mesh.elements.length} elements`));
  return svgDocument(size, size, body);
}
