import { readFileSync } from "node:fs";
import { basename } from "node:path";
import Papa from "papaparse";

/** Column order of a run trace CSV, one row per control step. */
export const TRACE_COLUMNS = [
  "t", "U_true", "omega_f_true", "omega_r_true",
  "U_meas", "omega_f_meas", "omega_r_meas",
  "U_est", "omega_f_est", "omega_r_est",
  "B_est", "C_est", "D_est", "E_est", "D_min", "D_max",
  "kappa_f", "mu_f_true", "torque", "J", "P_pred", "N_eff",
  "resampled", "retro", "lock",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

/** Input-side failure: unreadable file, schema mismatch, empty trace. */
export class TraceError extends Error {}

export interface Trace {
  /** File stem with a trailing "_trace" suffix stripped. */
  name: string;
  path: string;
  rows: number;
  columns: Map<TraceColumn, Float64Array>;
}

export function column(trace: Trace, name: TraceColumn): Float64Array {
  const col = trace.columns.get(name);
  if (col === undefined) {
    throw new TraceError(`${trace.path}: no column ${name}`);
  }
  return col;
}

function stem(path: string): string {
  const base = basename(path).replace(/\.[^.]*$/, "");
  return base.replace(/_trace$/, "");
}

/**
 * Parse one trace CSV against the fixed schema.
 *
 * The header must contain every trace column (extras are tolerated and
 * ignored); a mismatch reports all missing names at once. A file with a
 * valid header but no data rows is rejected, so a figure can never be
 * built from nothing.
 */
export function loadTrace(path: string): Trace {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch {
    throw new TraceError(`cannot read trace file: ${path}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new TraceError(`${path}: CSV parse failed (${first?.message})`);
  }
  const grid = parsed.data;
  const header = grid[0];
  if (header === undefined) {
    throw new TraceError(`${path}: empty trace, no header row`);
  }
  const missing = TRACE_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new TraceError(
      `${path}: trace schema mismatch, missing columns: ${missing.join(", ")}`,
    );
  }
  const body = grid.slice(1);
  if (body.length === 0) {
    throw new TraceError(`${path}: empty trace, header but no rows`);
  }

  const columns = new Map<TraceColumn, Float64Array>();
  for (const name of TRACE_COLUMNS) {
    const j = header.indexOf(name);
    const col = new Float64Array(body.length);
    for (let i = 0; i < body.length; i++) {
      // Number("nan") is NaN, matching the writer's spelling of missing
      // estimator columns in baseline traces
      col[i] = Number(body[i]?.[j]);
    }
    columns.set(name, col);
  }
  return { name: stem(path), path, rows: body.length, columns };
}
