/**
 * Minimal hand-rolled SVG chart primitives: no DOM, no dependencies,
 * deterministic output (fixed decimal formatting, insertion-ordered
 * elements), which keeps rendered files byte-stable for equal inputs.
 */

export const WIDTH = 760;
export const HEIGHT = 480;
export const MARGIN = { top: 40, right: 160, bottom: 56, left: 78 };

export const SERIES_COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

export const plotArea = {
  x0: MARGIN.left,
  y0: MARGIN.top,
  x1: WIDTH - MARGIN.right,
  y1: HEIGHT - MARGIN.bottom,
};

export function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(3);
}

export interface Scale {
  (value: number): number;
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function log10Scale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0);
  const span = Math.log10(d1) - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export function log2Scale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log2(d0);
  const span = Math.log2(d1) - l0 || 1;
  return (v) => r0 + ((Math.log2(v) - l0) / span) * (r1 - r0);
}

export class SvgChart {
  private parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
        `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${esc(title)}</text>`,
    );
  }

  frame(): void {
    const { x0, y0, x1, y1 } = plotArea;
    this.parts.push(
      `<rect x="${x0}" y="${y0}" width="${x1 - x0}" height="${y1 - y0}" ` +
        `fill="none" stroke="#333" stroke-width="1"/>`,
    );
  }

  xTick(px: number, label: string): void {
    const { y1 } = plotArea;
    this.parts.push(
      `<line x1="${fmt(px)}" y1="${y1}" x2="${fmt(px)}" y2="${y1 + 5}" stroke="#333"/>`,
      `<text x="${fmt(px)}" y="${y1 + 20}" text-anchor="middle" font-size="11">${esc(label)}</text>`,
    );
  }

  yTick(py: number, label: string, gridTo?: number): void {
    const { x0 } = plotArea;
    this.parts.push(
      `<line x1="${x0 - 5}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="#333"/>`,
      `<text x="${x0 - 9}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${esc(label)}</text>`,
    );
    if (gridTo !== undefined) {
      this.parts.push(
        `<line x1="${x0}" y1="${fmt(py)}" x2="${gridTo}" y2="${fmt(py)}" ` +
          `stroke="#ddd" stroke-width="0.5"/>`,
      );
    }
  }

  axisLabels(xLabel: string, yLabel: string): void {
    const { x0, x1, y0, y1 } = plotArea;
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${y1 + 42}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`,
      `<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" ` +
        `transform="rotate(-90 20 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    );
  }

  polyline(points: Array<[number, number]>, color: string, dashed = false): void {
    if (points.length === 0) return;
    const attr = dashed ? ` stroke-dasharray="5,4"` : "";
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"${attr}/>`,
    );
  }

  dots(points: Array<[number, number]>, color: string): void {
    for (const [x, y] of points) {
      this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="3" fill="${color}"/>`);
    }
  }

  vline(px: number, color: string, label?: string): void {
    const { y0, y1 } = plotArea;
    this.parts.push(
      `<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y1}" ` +
        `stroke="${color}" stroke-width="1" stroke-dasharray="3,3"/>`,
    );
    if (label) {
      this.parts.push(
        `<text x="${fmt(px + 3)}" y="${y0 + 12}" font-size="10" fill="${color}">${esc(label)}</text>`,
      );
    }
  }

  legendEntry(index: number, color: string, label: string): void {
    const x = plotArea.x1 + 12;
    const y = plotArea.y0 + 10 + index * 18;
    this.parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${x + 24}" y="${y + 4}" font-size="11">${esc(label)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
