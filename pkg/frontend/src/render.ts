import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { buildFigure, Figure, FigureKind } from "./figures.js";
import { loadTrace } from "./trace.js";

export interface PlotRequest {
  kind: FigureKind;
  /** Input trace CSV paths; never modified. */
  traces: string[];
  outDir: string;
}

export interface RenderResult {
  /** Path of the written SVG. */
  path: string;
  figure: Figure;
}

/**
 * Load and validate every input, build the figure, then write it. All
 * validation happens before the first write, so a bad request leaves no
 * file behind; re-running the same request overwrites the same file.
 */
export function render(req: PlotRequest): RenderResult {
  const traces = req.traces.map(loadTrace);
  const figure = buildFigure(req.kind, traces);
  mkdirSync(req.outDir, { recursive: true });
  const path = join(req.outDir, figure.file);
  writeFileSync(path, figure.svg);
  return { path, figure };
}
