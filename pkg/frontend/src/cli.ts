#!/usr/bin/env node
/**
 * plot sweep --in sweep.csv[,other.csv] --out fig.svg
 * plot ccdf  --in lat_hist.csv --out ccdf.svg
 *
 * Exit codes: 0 success, 1 runtime failure, 2 usage error.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseBenchCsv, parseLatencyCsv } from "./csv.js";
import { plotCcdf } from "./ccdf.js";
import { plotBatchSweep } from "./sweep.js";

const USAGE = `usage:
  plot sweep --in a.csv[,b.csv] --out fig.svg
  plot ccdf  --in lat.csv --out ccdf.svg`;

function parseArgs(argv: string[]): { cmd: string; inputs: string[]; out: string } {
  const [cmd, ...rest] = argv;
  if (cmd !== "sweep" && cmd !== "ccdf") {
    throw new UsageError(`unknown subcommand: ${cmd ?? "(none)"}`);
  }
  let inputs: string[] = [];
  let out = "";
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new UsageError(`missing value for ${flag}`);
    if (flag === "--in") inputs = value.split(",").filter((s) => s.length);
    else if (flag === "--out") out = value;
    else throw new UsageError(`unknown flag: ${flag}`);
  }
  if (inputs.length === 0 || !out) {
    throw new UsageError("--in and --out are required");
  }
  return { cmd, inputs, out };
}

class UsageError extends Error {}

export function main(argv: string[]): number {
  try {
    const { cmd, inputs, out } = parseArgs(argv);
    if (cmd === "sweep") {
      const loaded = inputs.map((file) => ({
        name: path.basename(file, ".csv"),
        rows: parseBenchCsv(fs.readFileSync(file, "utf8"), file),
      }));
      const { svg, summary } = plotBatchSweep(loaded);
      fs.writeFileSync(out, svg);
      console.log(summary);
      console.log(`wrote ${out}`);
    } else {
      if (inputs.length !== 1) {
        throw new UsageError("ccdf takes exactly one input file");
      }
      const samples = parseLatencyCsv(fs.readFileSync(inputs[0], "utf8"), inputs[0]);
      fs.writeFileSync(out, plotCcdf(samples));
      console.log(`wrote ${out}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}\n${USAGE}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url.endsWith(path.basename(process.argv[1]))) {
  process.exit(main(process.argv.slice(2)));
}
