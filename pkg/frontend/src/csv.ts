/**
 * Strict parsers for the benchmark CSV exports.
 *
 * The sweep/latency schema is pinned; a file with missing, extra, or
 * reordered columns is rejected rather than guessed at. Latency sample
 * files come either raw (one `latency_ticks` column) or as a histogram
 * (`latency_ticks,count`).
 */

export const BENCH_HEADER =
  "scenario,batch,ring,offered_pps,secs,forwarded,dev_drops," +
  "app_drops,p50,p90,p99,p999,p9999,p99999,p999999,max,unit";

export interface BenchRow {
  scenario: string;
  batch: number;
  ring: number;
  offered_pps: number;
  secs: number;
  forwarded: number;
  dev_drops: number;
  app_drops: number;
  p50: number;
  p90: number;
  p99: number;
  p999: number;
  p9999: number;
  p99999: number;
  p999999: number;
  max: number;
  unit: string;
}

export class SchemaError extends Error {}

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((line) => line.length > 0);
}

export function parseBenchCsv(text: string, source = "<input>"): BenchRow[] {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  if (lines[0] !== BENCH_HEADER) {
    throw new SchemaError(
      `${source}: header does not match the bench export schema\n` +
        `  expected: ${BENCH_HEADER}\n  found:    ${lines[0]}`,
    );
  }
  const names = BENCH_HEADER.split(",");
  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== names.length) {
      throw new SchemaError(
        `${source}: row ${i + 2} has ${cells.length} columns, expected ${names.length}`,
      );
    }
    const row: Record<string, string | number> = {};
    names.forEach((name, col) => {
      if (name === "scenario" || name === "unit") {
        row[name] = cells[col];
        return;
      }
      const value = Number(cells[col]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(
          `${source}: row ${i + 2} column ${name}: not a number: ${cells[col]}`,
        );
      }
      row[name] = value;
    });
    return row as unknown as BenchRow;
  });
}

export interface LatencySamples {
  /** distinct latency values, ascending */
  values: number[];
  /** occurrences per value (all 1 for raw exports) */
  counts: number[];
}

export function parseLatencyCsv(text: string, source = "<input>"): LatencySamples {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const header = lines[0];
  const histogram = header === "latency_ticks,count";
  if (!histogram && header !== "latency_ticks") {
    throw new SchemaError(
      `${source}: expected 'latency_ticks' or 'latency_ticks,count', found '${header}'`,
    );
  }
  const byValue = new Map<number, number>();
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== (histogram ? 2 : 1)) {
      throw new SchemaError(`${source}: row ${i + 1} is malformed`);
    }
    const value = Number(cells[0]);
    const count = histogram ? Number(cells[1]) : 1;
    if (!Number.isFinite(value) || !Number.isFinite(count) || count < 0) {
      throw new SchemaError(`${source}: row ${i + 1} is not numeric`);
    }
    byValue.set(value, (byValue.get(value) ?? 0) + count);
  }
  const values = [...byValue.keys()].sort((a, b) => a - b);
  return { values, counts: values.map((v) => byValue.get(v)!) };
}
