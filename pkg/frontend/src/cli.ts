#!/usr/bin/env node
import { FIGURE_KINDS, FigureError, FigureKind } from "./figures.js";
import { render } from "./render.js";
import { TraceError } from "./trace.js";

const USAGE = `usage: abslab-plots <kind> [--out DIR] <trace.csv> [trace.csv ...]
kinds: ${FIGURE_KINDS.join(", ")}`;

export function main(argv: string[]): number {
  const positional: string[] = [];
  let outDir = ".";
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i] as string;
    if (arg === "--out") {
      const value = argv[++i];
      if (value === undefined) {
        console.error("--out needs a directory");
        return 1;
      }
      outDir = value;
    } else if (arg === "-h" || arg === "--help") {
      console.log(USAGE);
      return 0;
    } else if (arg.startsWith("-")) {
      console.error(`unknown flag: ${arg}\n${USAGE}`);
      return 1;
    } else {
      positional.push(arg);
    }
  }
  const [kind, ...traces] = positional;
  if (kind === undefined || !FIGURE_KINDS.includes(kind as FigureKind)) {
    console.error(USAGE);
    return 1;
  }
  if (traces.length === 0) {
    console.error(`no input traces\n${USAGE}`);
    return 1;
  }
  try {
    const result = render({ kind: kind as FigureKind, traces, outDir });
    console.log(result.path);
    return 0;
  } catch (err) {
    if (err instanceof TraceError || err instanceof FigureError) {
      console.error(err.message);
      return 1;
    }
    throw err;
  }
}

process.exitCode = main(process.argv.slice(2));
