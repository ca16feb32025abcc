// End-to-end contract: from one completed side-by-side braking run (three
// controller traces plus a paired uncertainty-reset on/off pair), every
// figure kind renders without error, and the parameter figure's envelope
// brackets the mean estimate at every plotted sample.
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { FIGURE_KINDS, FigureKind } from "../src/figures.js";
import { render } from "../src/render.js";
import type { Series } from "../src/svg.js";

const fx = (name: string) =>
  fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));

const INPUTS: Record<FigureKind, string[]> = {
  speeds: [fx("duel_dcee_trace.csv")],
  "slip-mu": [fx("duel_dcee_trace.csv")],
  params: [fx("duel_dcee_trace.csv")],
  uncertainty: [fx("switch_retro_trace.csv"), fx("switch_noretro_trace.csv")],
  compare: [
    fx("duel_dcee_trace.csv"),
    fx("duel_csp_trace.csv"),
    fx("duel_bisection_trace.csv"),
  ],
  forces: [
    fx("duel_dcee_trace.csv"),
    fx("duel_csp_trace.csv"),
    fx("duel_bisection_trace.csv"),
  ],
};

describe("figure set round-trip", () => {
  const out = mkdtempSync(join(tmpdir(), "abslab-figures-"));

  it.each(FIGURE_KINDS.map((k) => [k] as [FigureKind]))(
    "renders the %s figure from completed runs",
    (kind) => {
      const result = render({ kind, traces: INPUTS[kind], outDir: out });
      expect(existsSync(result.path)).toBe(true);
      const svg = readFileSync(result.path, "utf-8");
      expect(svg.startsWith("<?xml")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    },
  );

  it("params envelope brackets the mean curve at every sample", () => {
    const { figure } = render({
      kind: "params",
      traces: INPUTS.params,
      outDir: out,
    });
    const peak = figure.panels.find((p) => p.yLabel.startsWith("D"))!;
    const series = peak.series[0] as Series;
    const band = series.band!;
    expect(band).toBeDefined();
    expect(series.y.length).toBeGreaterThan(100);
    for (let i = 0; i < series.y.length; i++) {
      const mean = series.y[i] as number;
      expect(Number.isFinite(mean)).toBe(true);
      expect(band.lo[i] as number).toBeLessThanOrEqual(mean);
      expect(mean).toBeLessThanOrEqual(band.hi[i] as number);
    }
  });
});
