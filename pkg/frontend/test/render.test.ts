import { spawnSync } from "node:child_process";
import {
  existsSync,
  mkdtempSync,
  readFileSync,
  readdirSync,
  writeFileSync,
} from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { render } from "../src/render.js";
import { TRACE_COLUMNS, TraceError } from "../src/trace.js";

const fx = (name: string) =>
  fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));
const cliJs = fileURLToPath(new URL("../dist/cli.js", import.meta.url));

const tmp = () => mkdtempSync(join(tmpdir(), "abslab-plots-"));

describe("render", () => {
  it("writes the figure under the derived name and reports it", () => {
    const out = tmp();
    const result = render({
      kind: "speeds",
      traces: [fx("duel_dcee_trace.csv")],
      outDir: out,
    });
    expect(result.path).toBe(join(out, "duel_dcee_speeds.svg"));
    expect(readFileSync(result.path, "utf-8")).toBe(result.figure.svg);
  });

  it("re-runs byte-identically and overwrites in place", () => {
    const out = tmp();
    const req = {
      kind: "params" as const,
      traces: [fx("duel_dcee_trace.csv")],
      outDir: out,
    };
    const first = render(req);
    const bytesA = readFileSync(first.path);
    const second = render(req);
    expect(second.path).toBe(first.path);
    expect(readFileSync(second.path).equals(bytesA)).toBe(true);
    expect(readdirSync(out)).toHaveLength(1);
  });

  it("never modifies its input files", () => {
    const path = fx("duel_dcee_trace.csv");
    const before = readFileSync(path);
    render({ kind: "slip-mu", traces: [path], outDir: tmp() });
    expect(readFileSync(path).equals(before)).toBe(true);
  });

  it("fails on an empty trace before creating any output", () => {
    const dir = tmp();
    const empty = join(dir, "void_trace.csv");
    writeFileSync(empty, TRACE_COLUMNS.join(",") + "\n");
    const out = join(dir, "figures");
    expect(() =>
      render({ kind: "speeds", traces: [empty], outDir: out }),
    ).toThrowError(TraceError);
    expect(existsSync(out)).toBe(false);
  });
});

describe("command line", () => {
  const run = (...args: string[]) =>
    spawnSync(process.execPath, [cliJs, ...args], { encoding: "utf-8" });

  it("renders a figure and prints the written path", () => {
    const out = tmp();
    const res = run("speeds", "--out", out, fx("duel_dcee_trace.csv"));
    expect(res.status).toBe(0);
    const written = res.stdout.trim();
    expect(written).toBe(join(out, "duel_dcee_speeds.svg"));
    expect(existsSync(written)).toBe(true);
  });

  it("shows usage and fails without arguments", () => {
    const res = run();
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("usage:");
  });

  it("rejects an unknown figure kind", () => {
    const res = run("sparklines", fx("duel_dcee_trace.csv"));
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("usage:");
  });

  it("rejects an unknown flag", () => {
    const res = run("speeds", "--shiny", fx("duel_dcee_trace.csv"));
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("unknown flag");
  });

  it("fails nonzero and names the missing columns on a schema mismatch", () => {
    const dir = tmp();
    const header = TRACE_COLUMNS.filter((c) => c !== "torque" && c !== "N_eff");
    const bad = join(dir, "bad_trace.csv");
    writeFileSync(bad, header.join(",") + "\n" + header.map(() => "1").join(",") + "\n");
    const res = run("speeds", "--out", dir, bad);
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("missing columns");
    expect(res.stderr).toContain("torque");
    expect(res.stderr).toContain("N_eff");
  });

  it("prints help on request", () => {
    const res = run("--help");
    expect(res.status).toBe(0);
    expect(res.stdout).toContain("speeds");
    expect(res.stdout).toContain("forces");
  });
});
