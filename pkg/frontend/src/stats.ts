/**
 * Empirical tail statistics over (value, count) samples.
 */

import type { LatencySamples } from "./csv.js";

export interface CcdfPoint {
  x: number;
  /** P(latency > x) */
  p: number;
}

export function totalCount(samples: LatencySamples): number {
  return samples.counts.reduce((a, b) => a + b, 0);
}

/** Brute-force empirical CCDF: one point per distinct value. */
export function ccdfPoints(samples: LatencySamples): CcdfPoint[] {
  const n = totalCount(samples);
  if (n === 0) {
    throw new Error("CCDF of an empty sample set");
  }
  let seen = 0;
  return samples.values.map((x, i) => {
    seen += samples.counts[i];
    return { x, p: (n - seen) / n };
  });
}

/** Nearest-rank percentile over the weighted samples. */
export function percentile(samples: LatencySamples, q: number): number {
  const n = totalCount(samples);
  if (n === 0) {
    throw new Error("percentile of an empty sample set");
  }
  const rank = Math.max(Math.ceil((q / 100) * n), 1);
  let seen = 0;
  for (let i = 0; i < samples.values.length; i++) {
    seen += samples.counts[i];
    if (seen >= rank) {
      return samples.values[i];
    }
  }
  return samples.values[samples.values.length - 1];
}
