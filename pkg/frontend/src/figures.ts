import { column, Trace, TraceError } from "./trace.js";
import { Panel, renderChart, Series } from "./svg.js";

export const FIGURE_KINDS = [
  "speeds", "slip-mu", "params", "uncertainty", "compare", "forces",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

/** Request-side failure: unknown kind or wrong number of input traces. */
export class FigureError extends Error {}

export interface Figure {
  kind: FigureKind;
  /** Output file name derived from the input trace names. */
  file: string;
  svg: string;
  /** The exact data arrays behind every drawn curve and band. */
  panels: Panel[];
}

function figureFile(kind: FigureKind, traces: Trace[]): string {
  return `${traces.map((t) => t.name).join("__")}_${kind}.svg`;
}

/**
 * Shortest distinguishing labels for a set of traces: the longest common
 * name prefix is stripped when every remainder stays non-empty, so
 * "duel_dcee" / "duel_csp" / "duel_bisection" label as the controllers.
 */
function shortLabels(traces: Trace[]): string[] {
  const names = traces.map((t) => t.name);
  if (names.length < 2) return names;
  let prefix = names[0] ?? "";
  for (const n of names) {
    while (prefix && !n.startsWith(prefix)) prefix = prefix.slice(0, -1);
  }
  const cut = names.map((n) => n.slice(prefix.length));
  if (cut.every((n) => n.length > 0) && new Set(cut).size === cut.length) {
    return cut;
  }
  return names.map((n, i) => (names.indexOf(n) === i ? n : `${n} (${i})`));
}

function frictionCurve(b: number, c: number, d: number, e: number, k: number): number {
  const bk = b * k;
  return d * Math.sin(c * Math.atan(bk - e * (bk - Math.atan(bk))));
}

function lastFiniteEstimates(trace: Trace): [number, number, number, number] {
  const b = column(trace, "B_est");
  const c = column(trace, "C_est");
  const d = column(trace, "D_est");
  const e = column(trace, "E_est");
  for (let i = b.length - 1; i >= 0; i--) {
    const row = [b[i], c[i], d[i], e[i]] as number[];
    if (row.every((v) => Number.isFinite(v))) {
      return row as [number, number, number, number];
    }
  }
  throw new TraceError(
    `${trace.path}: no tyre parameter estimates (columns B_est..E_est hold no finite values)`,
  );
}

function requireFinite(trace: Trace, name: "P_pred" | "B_est"): void {
  const col = column(trace, name);
  if (!col.some((v) => Number.isFinite(v))) {
    throw new TraceError(
      `${trace.path}: column ${name} holds no finite values (not an estimator run?)`,
    );
  }
}

function speedsFigure(trace: Trace): Panel[] {
  const t = column(trace, "t");
  const u = column(trace, "U_true");
  const wf = column(trace, "omega_f_true");
  const wr = column(trace, "omega_r_true");
  // the run starts free-rolling, so the first sample fixes the rolling
  // radius and wheel spins can share the vehicle-speed axis
  const radius = (u[0] as number) / (wf[0] as number);
  const scale = (w: Float64Array) => Float64Array.from(w, (v) => v * radius);
  const series: Series[] = [
    { label: "vehicle", x: t, y: u },
    { label: "front wheel", x: t, y: scale(wf) },
    { label: "rear wheel", x: t, y: scale(wr) },
  ];
  const est = column(trace, "U_est");
  if (est.some((v) => Number.isFinite(v))) {
    series.push({ label: "estimated vehicle", x: t, y: est, dash: "6,3" });
  }
  return [{ yLabel: "speed (m/s)", series }];
}

function slipMuFigure(trace: Trace): Panel[] {
  const kappa = column(trace, "kappa_f");
  const mu = column(trace, "mu_f_true");
  const [b, c, d, e] = lastFiniteEstimates(trace);
  let lo = 0;
  let hi = 0;
  for (const k of kappa) {
    if (Number.isFinite(k)) {
      if (k < lo) lo = k;
      if (k > hi) hi = k;
    }
  }
  const n = 161;
  const grid = new Float64Array(n);
  const fit = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const k = lo + ((hi - lo) * i) / (n - 1);
    grid[i] = k;
    fit[i] = frictionCurve(b, c, d, e, k);
  }
  return [
    {
      yLabel: "friction coefficient",
      series: [
        { label: "realized", x: kappa, y: mu, markers: true, noLine: true },
        { label: "estimated curve", x: grid, y: fit },
      ],
    },
  ];
}

function paramsFigure(trace: Trace): Panel[] {
  requireFinite(trace, "B_est");
  const t = column(trace, "t");
  const dSeries: Series = {
    label: "estimate",
    x: t,
    y: column(trace, "D_est"),
    band: { lo: column(trace, "D_min"), hi: column(trace, "D_max") },
  };
  return [
    { yLabel: "B (stiffness)", series: [{ label: "estimate", x: t, y: column(trace, "B_est") }] },
    { yLabel: "C (shape)", series: [{ label: "estimate", x: t, y: column(trace, "C_est") }] },
    { yLabel: "D (peak)", series: [dSeries] },
    { yLabel: "E (curvature)", series: [{ label: "estimate", x: t, y: column(trace, "E_est") }] },
  ];
}

function uncertaintyFigure(traces: Trace[]): Panel[] {
  const series: Series[] = [];
  for (const trace of traces) {
    requireFinite(trace, "P_pred");
    const t = column(trace, "t");
    const p = column(trace, "P_pred");
    series.push({ label: trace.name, x: t, y: p });
    const retro = column(trace, "retro");
    const fx: number[] = [];
    const fy: number[] = [];
    for (let i = 0; i < retro.length; i++) {
      if (retro[i] === 1 && Number.isFinite(p[i] as number)) {
        fx.push(t[i] as number);
        fy.push(p[i] as number);
      }
    }
    if (fx.length > 0) {
      series.push({
        label: `${trace.name} resets`,
        x: fx,
        y: fy,
        markers: true,
        noLine: true,
      });
    }
  }
  return [{ yLabel: "predicted variance (N^2)", series }];
}

function compareFigure(traces: Trace[]): Panel[] {
  const labels = shortLabels(traces);
  const series = traces.map((trace, i) => ({
    label: labels[i] as string,
    x: column(trace, "t"),
    y: column(trace, "U_true"),
  }));
  return [{ yLabel: "vehicle speed (m/s)", series }];
}

function forcesFigure(traces: Trace[]): Panel[] {
  const labels = shortLabels(traces);
  const friction: Series[] = [];
  const torque: Series[] = [];
  traces.forEach((trace, i) => {
    const t = column(trace, "t");
    const label = labels[i] as string;
    friction.push({ label, x: t, y: column(trace, "mu_f_true") });
    torque.push({ label, x: t, y: column(trace, "torque") });
  });
  return [
    { yLabel: "front friction coefficient", series: friction },
    { yLabel: "front-axle torque (N m)", series: torque },
  ];
}

const ARITY: Record<FigureKind, [number, number]> = {
  speeds: [1, 1],
  "slip-mu": [1, 1],
  params: [1, 1],
  uncertainty: [1, 2],
  compare: [2, Infinity],
  forces: [1, Infinity],
};

const TITLES: Record<FigureKind, [string, string]> = {
  speeds: ["Vehicle and wheel speeds", "time (s)"],
  "slip-mu": ["Friction against slip", "longitudinal slip ratio"],
  params: ["Tyre parameter estimates", "time (s)"],
  uncertainty: ["Predicted tracking uncertainty", "time (s)"],
  compare: ["Stopping comparison", "time (s)"],
  forces: ["Front friction and brake torque", "time (s)"],
};

export function buildFigure(kind: FigureKind, traces: Trace[]): Figure {
  if (!FIGURE_KINDS.includes(kind)) {
    throw new FigureError(`unknown figure kind: ${kind}`);
  }
  const [lo, hi] = ARITY[kind];
  if (traces.length < lo || traces.length > hi) {
    const want = lo === hi ? `${lo}` : hi === Infinity ? `at least ${lo}` : `${lo} to ${hi}`;
    throw new FigureError(
      `figure kind ${kind} takes ${want} trace(s), got ${traces.length}`,
    );
  }
  let panels: Panel[];
  switch (kind) {
    case "speeds":
      panels = speedsFigure(traces[0] as Trace);
      break;
    case "slip-mu":
      panels = slipMuFigure(traces[0] as Trace);
      break;
    case "params":
      panels = paramsFigure(traces[0] as Trace);
      break;
    case "uncertainty":
      panels = uncertaintyFigure(traces);
      break;
    case "compare":
      panels = compareFigure(traces);
      break;
    case "forces":
      panels = forcesFigure(traces);
      break;
  }
  const [title, xLabel] = TITLES[kind];
  return {
    kind,
    file: figureFile(kind, traces),
    svg: renderChart(title, xLabel, panels),
    panels,
  };
}
