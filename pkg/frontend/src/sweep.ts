/**
 * Forwarding rate vs batch size: one labeled line per scenario, x on
 * log2 ticks, y in Mpps, plus a deterministic text table of plateau rates.
 */

import { BenchRow, SchemaError } from "./csv.js";
import { SERIES_COLORS, SvgChart, linearScale, log2Scale, plotArea } from "./svg.js";

export interface SweepSeries {
  label: string;
  points: Array<{ batch: number; mpps: number }>;
}

export interface SweepResult {
  svg: string;
  /** `label  plateau_mpps` lines, series order */
  summary: string;
}

export function groupSeries(inputs: Array<{ name: string; rows: BenchRow[] }>): SweepSeries[] {
  const series: SweepSeries[] = [];
  const multiFile = inputs.length > 1;
  for (const input of inputs) {
    const byScenario = new Map<string, BenchRow[]>();
    for (const row of input.rows) {
      const rows = byScenario.get(row.scenario) ?? [];
      rows.push(row);
      byScenario.set(row.scenario, rows);
    }
    for (const [scenario, rows] of byScenario) {
      const label = multiFile ? `${input.name}:${scenario}` : scenario;
      const points = rows
        .map((r) => ({ batch: r.batch, mpps: r.secs > 0 ? r.forwarded / r.secs / 1e6 : 0 }))
        .sort((a, b) => a.batch - b.batch);
      series.push({ label, points });
    }
  }
  return series;
}

export function plotBatchSweep(inputs: Array<{ name: string; rows: BenchRow[] }>): SweepResult {
  const series = groupSeries(inputs);
  if (series.length === 0 || series.every((s) => s.points.length === 0)) {
    throw new SchemaError("no sweep rows to plot");
  }
  const batches = series.flatMap((s) => s.points.map((p) => p.batch));
  const rates = series.flatMap((s) => s.points.map((p) => p.mpps));
  const bMin = Math.min(...batches);
  const bMax = Math.max(...batches);
  const yMax = Math.max(...rates) * 1.08 || 1;

  const { x0, y0, x1, y1 } = plotArea;
  const sx = log2Scale(bMin, Math.max(bMax, bMin * 2), x0, x1);
  const sy = linearScale(0, yMax, y1, y0);

  const chart = new SvgChart("Forwarding rate vs batch size");
  chart.frame();
  for (let b = bMin; b <= bMax; b *= 2) {
    chart.xTick(sx(b), String(b));
  }
  const yStep = niceStep(yMax);
  for (let v = 0; v <= yMax; v += yStep) {
    chart.yTick(sy(v), v.toFixed(v < 10 ? 1 : 0), x1);
  }
  chart.axisLabels("batch size (log2)", "forwarding rate [Mpps]");

  const summaryLines: string[] = [];
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    const pts = s.points.map((p) => [sx(p.batch), sy(p.mpps)] as [number, number]);
    chart.polyline(pts, color);
    chart.dots(pts, color);
    chart.legendEntry(i, color, s.label);
    const plateau = Math.max(...s.points.map((p) => p.mpps));
    summaryLines.push(`${s.label}\t${plateau.toFixed(3)} Mpps plateau`);
  });

  return { svg: chart.render(), summary: summaryLines.join("\n") };
}

function niceStep(maxValue: number): number {
  const raw = maxValue / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(raw || 1)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}
