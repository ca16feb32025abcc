/**
 * Minimal deterministic SVG line charts: fixed palette, no timestamps, no
 * randomness, coordinates rounded to 1/100 px, so the same inputs always
 * produce byte-identical files.
 */

export type Vec = Float64Array | number[];

export interface Band {
  lo: Vec;
  hi: Vec;
}

export interface Series {
  label: string;
  x: Vec;
  y: Vec;
  /** Shaded region sharing the series x values, drawn behind the line. */
  band?: Band;
  /** SVG dash pattern, e.g. "6,3"; solid when omitted. */
  dash?: string;
  /** Draw a dot at every finite sample. */
  markers?: boolean;
  /** Suppress the connecting line (markers only). */
  noLine?: boolean;
}

export interface Panel {
  yLabel: string;
  series: Series[];
}

const PALETTE = [
  "#1f6fb4", "#c23b3b", "#2f8f4e", "#7d58b5", "#d9822b", "#5e6a72",
];

const WIDTH = 860;
const PANEL_HEIGHT = 230;
const MARGIN = { top: 46, right: 170, bottom: 46, left: 72 };
const PANEL_GAP = 14;

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function finiteExtent(values: Vec, into: [number, number]): void {
  for (let i = 0; i < values.length; i++) {
    const v = values[i] as number;
    if (Number.isFinite(v)) {
      if (v < into[0]) into[0] = v;
      if (v > into[1]) into[1] = v;
    }
  }
}

function niceTicks(lo: number, hi: number, count: number): number[] {
  const range = hi - lo;
  if (!(range > 0)) return [lo];
  const raw = range / count;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  return String(Number(v.toPrecision(10)));
}

interface Scale {
  (v: number): number;
}

function makeScale(lo: number, hi: number, a: number, b: number): Scale {
  const span = hi - lo;
  if (!(span > 0)) {
    const mid = (a + b) / 2;
    return () => mid;
  }
  return (v: number) => a + ((v - lo) / span) * (b - a);
}

function px(v: number): string {
  return v.toFixed(2);
}

/** Path data for a polyline, broken at non-finite samples. */
function linePath(x: Vec, y: Vec, sx: Scale, sy: Scale): string {
  let d = "";
  let pen = false;
  for (let i = 0; i < x.length; i++) {
    const xv = x[i] as number;
    const yv = y[i] as number;
    if (Number.isFinite(xv) && Number.isFinite(yv)) {
      d += `${pen ? "L" : "M"}${px(sx(xv))} ${px(sy(yv))}`;
      pen = true;
    } else {
      pen = false;
    }
  }
  return d;
}

/** Closed path for a lo/hi band, split into runs of finite samples. */
function bandPath(x: Vec, band: Band, sx: Scale, sy: Scale): string {
  let d = "";
  let run: number[] = [];
  const flush = () => {
    if (run.length < 2) {
      run = [];
      return;
    }
    let up = "";
    let down = "";
    for (const i of run) {
      up += `${up ? "L" : "M"}${px(sx(x[i] as number))} ${px(sy(band.lo[i] as number))}`;
    }
    for (let k = run.length - 1; k >= 0; k--) {
      const i = run[k] as number;
      down += `L${px(sx(x[i] as number))} ${px(sy(band.hi[i] as number))}`;
    }
    d += up + down + "Z";
    run = [];
  };
  for (let i = 0; i < x.length; i++) {
    const ok =
      Number.isFinite(x[i] as number) &&
      Number.isFinite(band.lo[i] as number) &&
      Number.isFinite(band.hi[i] as number);
    if (ok) run.push(i);
    else flush();
  }
  flush();
  return d;
}

function seriesColor(figureOrder: string[], label: string): string {
  const i = figureOrder.indexOf(label);
  return PALETTE[(i >= 0 ? i : 0) % PALETTE.length] as string;
}

/**
 * Render stacked panels sharing one x axis into a complete SVG document.
 * One legend entry per distinct series label, in first-appearance order.
 */
export function renderChart(
  title: string,
  xLabel: string,
  panels: Panel[],
): string {
  const height =
    MARGIN.top +
    panels.length * PANEL_HEIGHT +
    (panels.length - 1) * PANEL_GAP +
    MARGIN.bottom;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;

  const xExt: [number, number] = [Infinity, -Infinity];
  for (const p of panels) {
    for (const s of p.series) finiteExtent(s.x, xExt);
  }
  if (!(xExt[0] < xExt[1])) {
    xExt[0] -= 0.5;
    xExt[1] = xExt[0] + 1;
  }
  const sx = makeScale(xExt[0], xExt[1], MARGIN.left, MARGIN.left + plotW);
  const xTicks = niceTicks(xExt[0], xExt[1], 8);

  const labels: string[] = [];
  for (const p of panels) {
    for (const s of p.series) {
      if (!labels.includes(s.label)) labels.push(s.label);
    }
  }

  let body = "";
  for (let pi = 0; pi < panels.length; pi++) {
    const panel = panels[pi] as Panel;
    const top = MARGIN.top + pi * (PANEL_HEIGHT + PANEL_GAP);
    const bottom = top + PANEL_HEIGHT;

    const yExt: [number, number] = [Infinity, -Infinity];
    for (const s of panel.series) {
      finiteExtent(s.y, yExt);
      if (s.band) {
        finiteExtent(s.band.lo, yExt);
        finiteExtent(s.band.hi, yExt);
      }
    }
    if (!(yExt[0] < yExt[1])) {
      yExt[0] -= 0.5;
      yExt[1] = yExt[0] + 1;
    }
    const pad = (yExt[1] - yExt[0]) * 0.06;
    const sy = makeScale(yExt[0] - pad, yExt[1] + pad, bottom, top);

    for (const t of niceTicks(yExt[0] - pad, yExt[1] + pad, 5)) {
      const y = px(sy(t));
      body += `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#e4e4e4" stroke-width="1"/>`;
      body += `<text x="${MARGIN.left - 8}" y="${px(sy(t) + 4)}" text-anchor="end" font-size="11" fill="#555">${fmtTick(t)}</text>`;
    }
    for (const t of xTicks) {
      const x = px(sx(t));
      body += `<line x1="${x}" y1="${top}" x2="${x}" y2="${bottom}" stroke="#f0f0f0" stroke-width="1"/>`;
      if (pi === panels.length - 1) {
        body += `<text x="${x}" y="${bottom + 18}" text-anchor="middle" font-size="11" fill="#555">${fmtTick(t)}</text>`;
      }
    }

    for (const s of panel.series) {
      if (!s.band) continue;
      const color = seriesColor(labels, s.label);
      body += `<path d="${bandPath(s.x, s.band, sx, sy)}" fill="${color}" fill-opacity="0.18" stroke="none"/>`;
    }
    for (const s of panel.series) {
      const color = seriesColor(labels, s.label);
      if (!s.noLine) {
        const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
        body += `<path d="${linePath(s.x, s.y, sx, sy)}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`;
      }
      if (s.markers) {
        for (let i = 0; i < s.x.length; i++) {
          const xv = s.x[i] as number;
          const yv = s.y[i] as number;
          if (Number.isFinite(xv) && Number.isFinite(yv)) {
            body += `<circle cx="${px(sx(xv))}" cy="${px(sy(yv))}" r="2" fill="${color}"/>`;
          }
        }
      }
    }

    body += `<rect x="${MARGIN.left}" y="${top}" width="${plotW}" height="${PANEL_HEIGHT}" fill="none" stroke="#333" stroke-width="1"/>`;
    body += `<text x="18" y="${px((top + bottom) / 2)}" text-anchor="middle" font-size="12" fill="#444" transform="rotate(-90, 18, ${px((top + bottom) / 2)})">${escapeXml(panel.yLabel)}</text>`;
  }

  body += `<text x="${MARGIN.left + plotW / 2}" y="${height - 12}" text-anchor="middle" font-size="12" fill="#444">${escapeXml(xLabel)}</text>`;

  let legend = "";
  const legendX = WIDTH - MARGIN.right + 14;
  let entryY = MARGIN.top + 6;
  const dashOf = new Map<string, string | undefined>();
  for (const p of panels) {
    for (const s of p.series) {
      if (!dashOf.has(s.label)) dashOf.set(s.label, s.dash);
    }
  }
  for (const label of labels) {
    const color = seriesColor(labels, label);
    const dash = dashOf.get(label);
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    legend += `<line x1="${legendX}" y1="${entryY}" x2="${legendX + 22}" y2="${entryY}" stroke="${color}" stroke-width="2"${dashAttr}/>`;
    legend += `<text x="${legendX + 28}" y="${entryY + 4}" font-size="12" fill="#333">${escapeXml(label)}</text>`;
    entryY += 20;
  }

  return `<?xml version="1.0" encoding="UTF-8"?>
<svg width="${WIDTH}" height="${height}" xmlns="http://www.w3.org/2000/svg">
<style>text { font-family: "DejaVu Sans", "Helvetica Neue", Arial, sans-serif; }</style>
<rect width="${WIDTH}" height="${height}" fill="white"/>
<text x="${WIDTH / 2}" y="28" text-anchor="middle" font-size="15" font-weight="bold" fill="#222">${escapeXml(title)}</text>
${body}
${legend}
</svg>
`;
}
