import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv.js";
import { plotEstimation, plotImprovement, plotTestingEffect, renderFigure } from "../src/figures.js";

const fixture = (name: string) =>
  readFileSync(new URL(`../fixtures/${name}`, import.meta.url), "utf8");

const TRACES = ["trace_budget_50.csv", "trace_budget_100.csv", "trace_budget_200.csv"];

/** All elements of a class, as attribute maps, pulled straight from the SVG text. */
function elements(svg: string, cls: string): Record<string, string>[] {
  const out: Record<string, string>[] = [];
  for (const piece of svg.match(new RegExp(`<[a-z]+ class="${cls}"[^>]*>`, "g")) ?? []) {
    const attrs: Record<string, string> = {};
    for (const m of piece.matchAll(/([a-zA-Z][a-zA-Z0-9-]*)="([^"]*)"/g)) attrs[m[1]] = m[2];
    out.push(attrs);
  }
  return out;
}

function lastPointY(points: string): number {
  const last = points.trim().split(" ").at(-1)!;
  return Number(last.split(",")[1]);
}

describe("plotTestingEffect", () => {
  it("renders one curve per budget from merged traces", () => {
    const svg = plotTestingEffect(TRACES.map((n) => parseCsv(fixture(n))));
    const curves = elements(svg, "curve");
    expect(curves.map((c) => c["data-budget"])).toEqual(["50", "100", "200"]);
  });

  it("puts heavier-testing curves below lighter ones at the end", () => {
    const svg = plotTestingEffect(TRACES.map((n) => parseCsv(fixture(n))));
    const finals = elements(svg, "curve").map((c) => lastPointY(c.points));
    expect(finals[0]).toBeLessThan(finals[1]);
    expect(finals[1]).toBeLessThan(finals[2]);
  });

  it("renders a single curve for a single-budget input", () => {
    const svg = plotTestingEffect([parseCsv(fixture(TRACES[0]))]);
    expect(elements(svg, "curve")).toHaveLength(1);
  });

  it("rejects an input with no data rows", () => {
    const headerOnly = fixture(TRACES[0]).split("\n")[0] + "\n";
    expect(() => plotTestingEffect([parseCsv(headerOnly)])).toThrow(/no data rows/);
  });

  it("rejects inputs with the wrong schema", () => {
    expect(() => plotTestingEffect([parseCsv(fixture("summary.csv"))])).toThrow(
      /expected columns/,
    );
  });
});

describe("plotImprovement", () => {
  it("draws a point, an interval, and a band for every strategy/budget cell", () => {
    const svg = plotImprovement([parseCsv(fixture("summary.csv"))]);
    expect(elements(svg, "improvement-point")).toHaveLength(16);
    expect(elements(svg, "improvement-interval")).toHaveLength(16);
    expect(elements(svg, "improvement-band")).toHaveLength(4);
  });

  it("renders one point with an interval for a single-cell summary", () => {
    const one =
      "strategy,budget,K,gamma,mean_diff_vs_random,ci68_low,ci68_high,replications\n" +
      "ucb,100,10,0.5,-2,-3,-1,30\n";
    const svg = plotImprovement([parseCsv(one)]);
    const points = elements(svg, "improvement-point");
    expect(points).toHaveLength(1);
    const [interval] = elements(svg, "improvement-interval");
    expect(Number(interval.y1)).toBeLessThan(Number(points[0].cy));
    expect(Number(interval.y2)).toBeGreaterThan(Number(points[0].cy));
  });

  it("draws a flat line on the zero reference for a random-only summary", () => {
    const flat =
      "strategy,budget,K,gamma,mean_diff_vs_random,ci68_low,ci68_high,replications\n" +
      "random,50,10,0.5,0,0,0,30\n" +
      "random,100,10,0.5,0,0,0,30\n";
    const svg = plotImprovement([parseCsv(flat)]);
    const ys = elements(svg, "improvement-point").map((p) => Number(p.cy));
    expect(ys[0]).toBe(ys[1]);
    const [zero] = elements(svg, "reference-line");
    expect(Number(zero.y1)).toBe(ys[0]);
  });

  it("facets by distinct (K, gamma) pairs", () => {
    const base = fixture("summary.csv");
    const shifted = base
      .split("\n")
      .map((line, i) => (i === 0 || line === "" ? line : line.replace(",0.5,", ",0.25,")))
      .join("\n");
    const svg = plotImprovement([parseCsv(base), parseCsv(shifted)]);
    const gammas = new Set(elements(svg, "improvement-point").map((p) => p["data-gamma"]));
    expect(gammas).toEqual(new Set(["0.5", "0.25"]));
    expect(svg).toContain("K = 100, γ = 0.25");
    expect(svg).toContain("K = 100, γ = 0.5");
  });

  // Known failing: this pins the target that a nearly-greedy allocator sits
  // clearly apart from thompson/exp3 at the largest budget. The shipped
  // simulator disagrees: greedy improves on random about as much as they do
  // (its interval overlaps both), so the assertion fails and is kept at its
  // original target rather than weakened. See the README.
  it("visually separates thompson and exp3 from sparse greedy at the largest budget", () => {
    const svg = plotImprovement([parseCsv(fixture("summary.csv"))]);
    const intervals = elements(svg, "improvement-interval").filter(
      (e) => e["data-budget"] === "500",
    );
    const span = (name: string): [number, number] => {
      const e = intervals.find((i) => i["data-strategy"] === name)!;
      const ys = [Number(e.y1), Number(e.y2)];
      return [Math.min(...ys), Math.max(...ys)];
    };
    const disjoint = (a: [number, number], b: [number, number]) => a[1] < b[0] || b[1] < a[0];
    const greedy = span("greedy");
    expect(disjoint(span("thompson"), greedy)).toBe(true);
    expect(disjoint(span("exp3"), greedy)).toBe(true);
  });
});

describe("plotEstimation", () => {
  it("renders a spread band and a dashed truth line per budget", () => {
    const svg = plotEstimation([parseCsv(fixture("estimation.csv"))]);
    expect(elements(svg, "estimate-band").map((b) => b["data-budget"])).toEqual(["4", "16", "64"]);
    expect(elements(svg, "truth-line")).toHaveLength(3);
  });

  it("renders every error as a dot plus one mean marker per budget", () => {
    const svg = plotEstimation([parseCsv(fixture("estimation.csv"))]);
    expect(elements(svg, "error-dot")).toHaveLength(4500);
    expect(elements(svg, "error-mean")).toHaveLength(3);
  });

  it("collapses the spread band onto a line for a single replication", () => {
    const one =
      "replication,t,budget,mu_true,mu_hat\n" +
      "0,0,8,0.1,0.15\n0,1,8,0.12,0.1\n0,2,8,0.14,0.2\n";
    const svg = plotEstimation([parseCsv(one)]);
    const [band] = elements(svg, "estimate-band");
    const ys = band.points.split(" ").map((p) => Number(p.split(",")[1]));
    const top = ys.slice(0, ys.length / 2);
    const bottom = ys.slice(ys.length / 2).reverse();
    expect(top).toEqual(bottom);
  });

  it("puts every error dot on the zero line when estimates equal the truth", () => {
    const exact =
      "replication,t,budget,mu_true,mu_hat\n" +
      "0,0,8,0.1,0.1\n0,1,8,0.2,0.2\n1,0,8,0.15,0.15\n1,1,8,0.3,0.3\n";
    const svg = plotEstimation([parseCsv(exact)]);
    const dotYs = new Set(elements(svg, "error-dot").map((d) => d.cy));
    expect(dotYs.size).toBe(1);
    const [mean] = elements(svg, "error-mean");
    expect(mean.y1).toBe([...dotYs][0]);
  });

  it("rejects inputs with the wrong schema", () => {
    expect(() => plotEstimation([parseCsv(fixture(TRACES[0]))])).toThrow(/expected columns/);
  });
});

describe("renderFigure", () => {
  it("dispatches each kind and returns a complete SVG document", () => {
    const svg = renderFigure("improvement", [fixture("summary.csv")]);
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.endsWith("</svg>\n")).toBe(true);
  });

  it("rejects an empty input list", () => {
    expect(() => renderFigure("improvement", [])).toThrow(/no input CSVs/);
  });

  it("is deterministic for identical input", () => {
    const texts = TRACES.map((n) => fixture(n));
    expect(renderFigure("testing_effect", texts)).toBe(renderFigure("testing_effect", texts));
  });
});
