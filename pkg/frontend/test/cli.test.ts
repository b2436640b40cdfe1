import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { main, parseArgs } from "../src/cli.js";

const fixturePath = (name: string) =>
  fileURLToPath(new URL(`../fixtures/${name}`, import.meta.url));

const outDir = () => mkdtempSync(join(tmpdir(), "plots-"));

describe("parseArgs", () => {
  it("collects repeated --in flags in order", () => {
    const spec = parseArgs(["--kind", "testing_effect", "--in", "a.csv", "--in", "b.csv", "--out", "x.svg"]);
    expect(spec.inputs).toEqual(["a.csv", "b.csv"]);
    expect(spec.kind).toBe("testing_effect");
    expect(spec.output).toBe("x.svg");
  });

  it("passes axis label overrides through", () => {
    const spec = parseArgs([
      "--kind", "improvement", "--in", "a.csv", "--out", "x.svg",
      "--x-label", "budget", "--y-label", "improvement",
    ]);
    expect(spec.labels).toEqual({ x: "budget", y: "improvement" });
  });

  it("rejects unknown kinds", () => {
    expect(() => parseArgs(["--kind", "scatter", "--in", "a.csv", "--out", "x.svg"])).toThrow(
      /--kind must be one of/,
    );
  });

  it("rejects a missing --kind, --in, or --out", () => {
    expect(() => parseArgs(["--in", "a.csv", "--out", "x.svg"])).toThrow(/--kind/);
    expect(() => parseArgs(["--kind", "improvement", "--out", "x.svg"])).toThrow(/--in/);
    expect(() => parseArgs(["--kind", "improvement", "--in", "a.csv"])).toThrow(/--out/);
  });

  it("rejects unknown flags and flags missing their value", () => {
    expect(() => parseArgs(["--oops"])).toThrow(/unknown argument/);
    expect(() => parseArgs(["--kind"])).toThrow(/missing value/);
  });
});

describe("main", () => {
  it("renders an SVG file and exits 0", () => {
    const out = join(outDir(), "improvement.svg");
    const code = main(["--kind", "improvement", "--in", fixturePath("summary.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8").startsWith("<svg ")).toBe(true);
  });

  it("merges repeated --in inputs into one figure", () => {
    const out = join(outDir(), "testing_effect.svg");
    const code = main([
      "--kind", "testing_effect",
      "--in", fixturePath("trace_budget_50.csv"),
      "--in", fixturePath("trace_budget_100.csv"),
      "--in", fixturePath("trace_budget_200.csv"),
      "--out", out,
    ]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8").match(/class="curve"/g)).toHaveLength(3);
  });

  it("writes identical bytes when run twice on the same input", () => {
    const dir = outDir();
    const first = join(dir, "a.svg");
    const second = join(dir, "b.svg");
    main(["--kind", "estimation", "--in", fixturePath("estimation.csv"), "--out", first]);
    main(["--kind", "estimation", "--in", fixturePath("estimation.csv"), "--out", second]);
    expect(readFileSync(first, "utf8")).toBe(readFileSync(second, "utf8"));
  });

  it("exits 1 on a schema mismatch and writes no file", () => {
    const out = join(outDir(), "x.svg");
    const code = main(["--kind", "estimation", "--in", fixturePath("summary.csv"), "--out", out]);
    expect(code).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("exits 1 on an empty input and writes no file", () => {
    const dir = outDir();
    const empty = join(dir, "empty.csv");
    const header = readFileSync(fixturePath("summary.csv"), "utf8").split("\n")[0] + "\n";
    const out = join(dir, "x.svg");
    writeFileSync(empty, header);
    const code = main(["--kind", "improvement", "--in", empty, "--out", out]);
    expect(code).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("exits 1 when an input file does not exist", () => {
    const out = join(outDir(), "x.svg");
    expect(main(["--kind", "improvement", "--in", "/nonexistent.csv", "--out", out])).toBe(1);
  });
});
