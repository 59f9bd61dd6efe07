#!/usr/bin/env node
/**
 * mgafem-plot: render convergence figures from run CSVs.
 *
 * Usage:
 *   mgafem-plot plot <spec.json>
 *   mgafem-plot plot --csv run.csv [--csv more.csv] --quantities delta,eta
 *                    [--x ndof|cumndof] [--slope -1[:label]] --out figure.svg
 *   mgafem-plot wireframe <mesh.txt> --out mesh.svg
 */

import { mkdirSync, readFileSync, writeFileSync } from "fs";
import { dirname } from "path";
import { CsvError } from "./csv";
import { PlotSpec, SlopeSpec, SpecError, renderFigure, validateSpec } from "./plot";
import { MeshDumpError, parseMeshDump, renderWireframe } from "./wireframe";

function fail(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.exit(2);
}

interface Flags {
  positional: string[];
  csv: string[];
  quantities?: string;
  x?: string;
  out?: string;
  slopes: SlopeSpec[];
}

function parseFlags(args: string[]): Flags {
  const flags: Flags = { positional: [], csv: [], slopes: [] };
  for (let i = 0; i < args.length; i += 1) {
    const arg = args[i];
    const next = () => {
      i += 1;
      if (i >= args.length) fail(`flag ${arg} needs a value`);
      return args[i];
    };
    if (arg === "--csv") flags.csv.push(next());
    else if (arg === "--quantities") flags.quantities = next();
    else if (arg === "--x") flags.x = next();
    else if (arg === "--out") flags.out = next();
    else if (arg === "--slope") {
      const raw = next();
      const [rate, label] = raw.split(":", 2);
      const value = Number(rate);
      if (!Number.isFinite(value)) fail(`bad slope ${JSON.stringify(raw)}`);
      flags.slopes.push(label ? { rate: value, label } : { rate: value });
    } else if (arg.startsWith("--")) fail(`unknown flag ${arg}`);
    else flags.positional.push(arg);
  }
  return flags;
}

function specFromFlags(flags: Flags): PlotSpec {
  if (!flags.out) fail("flag mode needs --out");
  if (!flags.quantities) fail("flag mode needs --quantities");
  const x = flags.x ?? "ndof";
  if (x !== "ndof" && x !== "cumndof") fail(`--x must be ndof or cumndof`);
  return {
    output: flags.out,
    panels: [{
      inputs: flags.csv.map((csv) => ({ csv })),
      quantities: flags.quantities.split(",").filter((q) => q.length),
      x,
      slopes: flags.slopes,
    }],
  };
}

function writeOutput(path: string, content: string): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, content, { encoding: "utf-8" });
}

export function runPlot(args: string[]): number {
  const flags = parseFlags(args);
  let spec: PlotSpec;
  if (flags.csv.length === 0) {
    if (flags.positional.length !== 1) {
      fail("plot needs a spec.json or --csv flags");
    }
    let raw: unknown;
    try {
      raw = JSON.parse(readFileSync(flags.positional[0], "utf-8"));
    } catch (exc) {
      fail(`cannot read spec ${flags.positional[0]}: ${(exc as Error).message}`);
    }
    spec = validateSpec(raw);
    if (flags.out) spec = { ...spec, output: flags.out };
  } else {
    spec = specFromFlags(flags);
  }
  const svg = renderFigure(spec);
  writeOutput(spec.output, svg);
  process.stdout.write(`wrote ${spec.output}\n`);
  return 0;
}

export function runWireframe(args: string[]): number {
  const flags = parseFlags(args);
  if (flags.positional.length !== 1 || !flags.out) {
    fail("wireframe needs a mesh dump file and --out");
  }
  const mesh = parseMeshDump(readFileSync(flags.positional[0], "utf-8"),
    flags.positional[0]);
  writeOutput(flags.out, renderWireframe(mesh));
  process.stdout.write(`wrote ${flags.out}\n`);
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "plot") return runPlot(rest);
    if (command === "wireframe") return runWireframe(rest);
  } catch (exc) {
    if (exc instanceof CsvError || exc instanceof SpecError
        || exc instanceof MeshDumpError) {
      fail(exc.message);
    }
    if ((exc as NodeJS.ErrnoException).code === "ENOENT") {
      fail((exc as Error).message);
    }
    throw exc;
  }
  fail(`usage: mgafem-plot plot <spec.json|--csv ...> | wireframe <mesh.txt> --out f.svg`);
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
