/**
 * Latency CCDF on a log-scaled y axis (1 down to 1e-6), the view that
 * exposes worst-case behavior, with markers at p99, p99.99, and p99.9999.
 */

import type { LatencySamples } from "./csv.js";
import { ccdfPoints, percentile, totalCount } from "./stats.js";
import { SvgChart, linearScale, log10Scale, plotArea } from "./svg.js";

export const Y_FLOOR = 1e-6;
const MARKERS: Array<[number, string]> = [
  [99, "p99"],
  [99.99, "p99.99"],
  [99.9999, "p99.9999"],
];

export function plotCcdf(samples: LatencySamples, unit = "ticks"): string {
  if (totalCount(samples) === 0) {
    throw new Error("no latency samples to plot");
  }
  const points = ccdfPoints(samples);
  const xMin = samples.values[0];
  const xMax = samples.values[samples.values.length - 1];

  const { x0, y0, x1, y1 } = plotArea;
  const sx = linearScale(xMin, xMax > xMin ? xMax : xMin + 1, x0, x1);
  const sy = log10Scale(Y_FLOOR, 1, y1, y0);
  const clampP = (p: number) => Math.max(p, Y_FLOOR);

  const chart = new SvgChart("Forwarding latency CCDF");
  chart.frame();
  for (let e = 0; e >= -6; e--) {
    chart.yTick(sy(Math.pow(10, e)), `1e${e}`, x1);
  }
  const xStep = (xMax - xMin) / 6 || 1;
  for (let i = 0; i <= 6; i++) {
    const v = xMin + i * xStep;
    chart.xTick(sx(v), v >= 1000 ? `${(v / 1000).toFixed(1)}k` : v.toFixed(0));
  }
  chart.axisLabels(`latency [${unit}]`, "CCDF  P(latency > x)");

  // step function: hold each probability until the next distinct value
  const path: Array<[number, number]> = [[sx(xMin), sy(1)]];
  let prev = 1;
  for (const pt of points) {
    path.push([sx(pt.x), sy(clampP(prev))]);
    path.push([sx(pt.x), sy(clampP(pt.p))]);
    prev = pt.p;
  }
  chart.polyline(path, "#1f77b4");

  for (const [q, label] of MARKERS) {
    chart.vline(sx(percentile(samples, q)), "#d62728", label);
  }
  return chart.render();
}
