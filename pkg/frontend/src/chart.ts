/** Minimal dependency-free SVG log-log chart for convergence data. */

export interface SeriesPoint {
  h: number;
  value: number;
  /** one-standard-error half width for error bars */
  err?: number;
}

export interface Series {
  label: string;
  color: string;
  points: SeriesPoint[];
  dashed?: boolean;
  markers?: boolean;
}

export interface ChartOptions {
  title: string;
  xLabel?: string;
  yLabel?: string;
  width?: number;
  height?: number;
  series: Series[];
}

const MARGIN = { left: 70, right: 20, top: 40, bottom: 50 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let d = Math.ceil(lo); d <= Math.floor(hi); d++) ticks.push(d);
  if (ticks.length >= 2) return ticks;
  // narrow range: use half decades instead
  const halves: number[] = [];
  for (let d = Math.ceil(2 * lo) / 2; d <= hi; d += 0.5) halves.push(d);
  return halves;
}

function tickLabel(t: number): string {
  return Number.isInteger(t) ? `1e${t}` : Math.pow(10, t).toPrecision(2);
}

export function logLogChart(opts: ChartOptions): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of opts.series) {
    for (const p of s.points) {
      if (p.h > 0 && p.value > 0) {
        xs.push(Math.log10(p.h));
        ys.push(Math.log10(p.value));
        if (p.err && p.value + p.err > 0) ys.push(Math.log10(p.value + p.err));
      }
    }
  }
  if (xs.length === 0) throw new Error("no positive data to plot");
  const pad = 0.08;
  const x0 = Math.min(...xs) - pad;
  const x1 = Math.max(...xs) + pad;
  const y0 = Math.min(...ys) - pad;
  const y1 = Math.max(...ys) + pad;

  const px = (logx: number) => MARGIN.left + ((logx - x0) / (x1 - x0)) * plotW;
  const py = (logy: number) => MARGIN.top + ((y1 - logy) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">${esc(opts.title)}</text>`,
  );

  // frame and decade grid
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#222"/>`,
  );
  for (const t of decadeTicks(x0, x1)) {
    const x = px(t);
    parts.push(
      `<line x1="${x.toFixed(2)}" y1="${MARGIN.top}" x2="${x.toFixed(2)}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`,
      `<text x="${x.toFixed(2)}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  for (const t of decadeTicks(y0, y1)) {
    const y = py(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${MARGIN.left + plotW}" y2="${y.toFixed(2)}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 6}" y="${(y + 4).toFixed(2)}" text-anchor="end" font-family="sans-serif" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  if (opts.xLabel) {
    parts.push(
      `<text x="${MARGIN.left + plotW / 2}" y="${height - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">${esc(opts.xLabel)}</text>`,
    );
  }
  if (opts.yLabel) {
    parts.push(
      `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${esc(opts.yLabel)}</text>`,
    );
  }

  // series
  for (const s of opts.series) {
    const pts = s.points
      .filter((p) => p.h > 0 && p.value > 0)
      .map((p) => ({ x: px(Math.log10(p.h)), y: py(Math.log10(p.value)), p }));
    if (pts.length === 0) continue;
    const coords = pts.map(({ x, y }) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    const dash = s.dashed ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${s.color}" stroke-width="1.6"${dash}/>`,
    );
    if (s.markers) {
      for (const { x, y, p } of pts) {
        parts.push(
          `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="3.2" fill="${s.color}"/>`,
        );
        if (p.err && p.err > 0) {
          const hi = py(Math.log10(p.value + p.err));
          const lo = py(Math.log10(Math.max(p.value - p.err, p.value * 1e-3)));
          parts.push(
            `<line x1="${x.toFixed(2)}" y1="${hi.toFixed(2)}" x2="${x.toFixed(2)}" y2="${lo.toFixed(2)}" stroke="${s.color}" stroke-width="1.2"/>`,
          );
        }
      }
    }
  }

  // legend, top right inside the frame
  let ly = MARGIN.top + 14;
  for (const s of opts.series) {
    const lx = MARGIN.left + plotW - 190;
    const dash = s.dashed ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" stroke="${s.color}" stroke-width="1.6"${dash}/>`,
      `<text x="${lx + 32}" y="${ly}" font-family="sans-serif" font-size="11">${esc(s.label)}</text>`,
    );
    ly += 16;
  }

  parts.push("</svg>");
  return parts.join("\n");
}
