/**
 * Reader for the adaptive-run CSV contract:
 *
 *   level,active_goal,n_elements,ndof,cumndof,eta,zeta_1..zeta_N,delta,
 *   marking,n_mark_u,n_mark_z,n_mark_uz,n_mark,solves_primal,solves_dual,
 *   goal_1..goal_N
 */

export interface RunTable {
  /** column name -> numeric values (the marking column is kept as strings) */
  columns: Map<string, number[]>;
  marking: string[];
  nGoals: number;
  nRows: number;
}

export class CsvError extends Error {}

const FIXED_PREFIX = ["level", "active_goal", "n_elements", "ndof", "cumndof", "eta"];
const FIXED_MIDDLE = ["delta", "marking", "n_mark_u", "n_mark_z", "n_mark_uz",
  "n_mark", "solves_primal", "solves_dual"];

export function expectedHeader(nGoals: number): string[] {
  const zetas = Array.from({ length: nGoals }, (_, i) => `zeta_${i + 1}`);
  const goals = Array.from({ length: nGoals }, (_, i) => `goal_${i + 1}`);
  return [...FIXED_PREFIX, ...zetas, ...FIXED_MIDDLE, ...goals];
}

export function parseRunCsv(text: string, source = "<csv>"): RunTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvError(`${source}: empty CSV`);
  }
  const header = lines[0].split(",");
  const nGoals = header.filter((c) => /^zeta_\d+$/.test(c)).length;
  const expected = expectedHeader(nGoals);
  if (nGoals === 0 || header.length !== expected.length
      || header.some((c, i) => c !== expected[i])) {
    throw new CsvError(`${source}: header does not match the CSV contract`);
  }
  if (lines.length === 1) {
    throw new CsvError(`${source}: CSV contains no level rows`);
  }
  const markingIndex = header.indexOf("marking");
  const columns = new Map<string, number[]>(
    header.filter((_, i) => i !== markingIndex).map((name) => [name, []]),
  );
  const marking: string[] = [];
  for (let r = 1; r < lines.length; r += 1) {
    const parts = lines[r].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(`${source}:${r + 1}: expected ${header.length} fields, `
        + `got ${parts.length}`);
    }
    for (let c = 0; c < header.length; c += 1) {
      if (c === markingIndex) {
        marking.push(parts[c]);
        continue;
      }
      const value = Number(parts[c]);
      if (!Number.isFinite(value)) {
        throw new CsvError(`${source}:${r + 1}: non-numeric value `
          + `${JSON.stringify(parts[c])} in column ${header[c]}`);
      }
      columns.get(header[c])!.push(value);
    }
  }
  return { columns, marking, nGoals, nRows: lines.length - 1 };
}

export function requireColumn(table: RunTable, name: string, source = "<csv>"): number[] {
  const values = table.columns.get(name);
  if (values === undefined) {
    throw new CsvError(`${source}: missing column ${JSON.stringify(name)}`);
  }
  return values;
}
