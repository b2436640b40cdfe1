/**
 * The three figure kinds rendered from the simulator's CSV outputs.
 *
 * Everything here stays on the presentation side of the fence: the only
 * arithmetic applied to CSV columns is grouping, min, max, and mean (plus
 * the row-wise estimate-minus-truth difference the estimation panel is
 * defined as showing). All science lives upstream.
 */

import { Table, checkColumns, concatTables, numbers, parseCsv, strings } from "./csv.js";
import {
  AxisTick,
  PALETTE,
  axes,
  makePanel,
  polylinePoints,
  referenceLine,
  svgDocument,
  tag,
} from "./svg.js";

export type FigureKind = "testing_effect" | "improvement" | "estimation";

export const FIGURE_KINDS: readonly FigureKind[] = ["testing_effect", "improvement", "estimation"];

export interface AxisLabels {
  x?: string;
  y?: string;
}

/** One figure to render: input CSVs, the kind, and where the SVG goes. */
export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  labels?: AxisLabels;
}

const TRACE_COLUMNS = [
  "replication",
  "t",
  "strategy",
  "budget",
  "unit",
  "tests",
  "positives",
  "cases",
  "pi",
  "mu_true",
  "mu_hat",
  "mu_hat_clipped",
] as const;

const SUMMARY_COLUMNS = [
  "strategy",
  "budget",
  "K",
  "gamma",
  "mean_diff_vs_random",
  "ci68_low",
  "ci68_high",
  "replications",
] as const;

const ESTIMATION_COLUMNS = ["replication", "t", "budget", "mu_true", "mu_hat"] as const;

/** Strategies get stable colors in this order; unknown names follow. */
const STRATEGY_ORDER = ["random", "greedy", "thompson", "ucb", "exp3"];

function orderStrategies(names: Iterable<string>): string[] {
  const unique = Array.from(new Set(names));
  const known = STRATEGY_ORDER.filter((name) => unique.includes(name));
  const rest = unique.filter((name) => !STRATEGY_ORDER.includes(name)).sort();
  return [...known, ...rest];
}

function sortedUnique(values: number[]): number[] {
  return Array.from(new Set(values)).sort((a, b) => a - b);
}

function mergeChecked(tables: Table[], expected: readonly string[], kind: string): Table {
  for (const table of tables) checkColumns(table, expected, kind);
  const merged = concatTables(tables);
  if (merged.rows.length === 0) throw new Error(`${kind}: no data rows`);
  return merged;
}

function legendEntry(x: number, y: number, color: string, label: string): string {
  return (
    tag("line", { x1: x, y1: y, x2: x + 18, y2: y, stroke: color, "stroke-width": 2 }) +
    tag("circle", { cx: x + 9, cy: y, r: 3, fill: color }) +
    tag("text", { x: x + 24, y: y + 3.5, fill: "#111111" }, label)
  );
}

// ── testing effect: case curves, one per budget ─────────────────────────

export function plotTestingEffect(tables: Table[], labels: AxisLabels = {}): string {
  const merged = mergeChecked(tables, TRACE_COLUMNS, "testing_effect");
  const budgetCol = numbers(merged, "budget");
  const tCol = numbers(merged, "t");
  const casesCol = numbers(merged, "cases");

  // mean of `cases` per (budget, t), averaging over replications and units
  const groups = new Map<number, Map<number, { sum: number; n: number }>>();
  for (let i = 0; i < budgetCol.length; i++) {
    let byT = groups.get(budgetCol[i]);
    if (!byT) groups.set(budgetCol[i], (byT = new Map()));
    const cell = byT.get(tCol[i]) ?? { sum: 0, n: 0 };
    cell.sum += casesCol[i];
    cell.n += 1;
    byT.set(tCol[i], cell);
  }

  const budgets = sortedUnique(budgetCol);
  let maxMean = 0;
  const curves = budgets.map((budget) => {
    const byT = groups.get(budget)!;
    const ts = sortedUnique(Array.from(byT.keys()));
    const means = ts.map((t) => {
      const cell = byT.get(t)!;
      const mean = cell.sum / cell.n;
      maxMean = Math.max(maxMean, mean);
      return mean;
    });
    return { budget, ts, means };
  });

  const allTs = sortedUnique(tCol);
  const panel = makePanel(
    64,
    24,
    470,
    350,
    [allTs[0], allTs[allTs.length - 1]],
    [0, maxMean > 0 ? maxMean * 1.05 : 1],
  );

  const parts: string[] = [];
  parts.push(axes(panel, labels.x ?? "time step", labels.y ?? "mean cases per unit"));
  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      tag("polyline", {
        class: "curve",
        "data-budget": String(curve.budget),
        points: polylinePoints(
          curve.ts.map((t) => panel.x.map(t)),
          curve.means.map((m) => panel.y.map(m)),
        ),
        fill: "none",
        stroke: color,
        "stroke-width": 1.8,
      }),
    );
    parts.push(legendEntry(panel.left + panel.width + 16, panel.top + 12 + i * 18, color, `budget ${curve.budget}`));
  });

  return svgDocument(680, 430, parts.join(""));
}

// ── improvement over random, faceted by (K, gamma) ──────────────────────

export function plotImprovement(tables: Table[], labels: AxisLabels = {}): string {
  const merged = mergeChecked(tables, SUMMARY_COLUMNS, "improvement");
  const strategyCol = strings(merged, "strategy");
  const budgetCol = numbers(merged, "budget");
  const kCol = numbers(merged, "K");
  const gammaCol = numbers(merged, "gamma");
  const meanCol = numbers(merged, "mean_diff_vs_random");
  const lowCol = numbers(merged, "ci68_low");
  const highCol = numbers(merged, "ci68_high");

  const ks = sortedUnique(kCol);
  const gammas = sortedUnique(gammaCol);
  const strategies = orderStrategies(strategyCol);
  const color = new Map(strategies.map((name, i) => [name, PALETTE[i % PALETTE.length]]));

  // shared domains so facets are comparable
  const maxBudget = Math.max(...budgetCol);
  const xDomain: [number, number] = [0, maxBudget * 1.06];
  const yLo = Math.min(0, ...lowCol);
  const yHi = Math.max(0, ...highCol);
  const pad = (yHi - yLo) * 0.06;
  const yDomain: [number, number] = [yLo - pad, yHi + pad];

  const plotW = 300;
  const plotH = 240;
  const blockW = plotW + 64 + 16;
  const blockH = plotH + 30 + 50;
  const legendH = 28;
  const width = gammas.length * blockW + 8;
  const height = legendH + ks.length * blockH;

  const parts: string[] = [];
  strategies.forEach((name, i) => {
    parts.push(legendEntry(12 + i * 110, legendH / 2, color.get(name)!, name));
  });

  for (let row = 0; row < ks.length; row++) {
    for (let col = 0; col < gammas.length; col++) {
      const k = ks[row];
      const gamma = gammas[col];
      const inFacet: number[] = [];
      for (let i = 0; i < merged.rows.length; i++) {
        if (kCol[i] === k && gammaCol[i] === gamma) inFacet.push(i);
      }
      if (inFacet.length === 0) continue;

      const panel = makePanel(
        col * blockW + 64,
        legendH + row * blockH + 30,
        plotW,
        plotH,
        xDomain,
        yDomain,
      );
      parts.push(
        tag(
          "text",
          { x: panel.left, y: panel.top - 8, fill: "#111111", "font-weight": "bold" },
          `K = ${k}, γ = ${gamma}`,
        ),
      );
      parts.push(
        axes(panel, labels.x ?? "tests per step (budget)", labels.y ?? "final cases vs random"),
      );
      parts.push(referenceLine(panel, 0));

      for (const name of strategies) {
        const rows = inFacet
          .filter((i) => strategyCol[i] === name)
          .sort((a, b) => budgetCol[a] - budgetCol[b]);
        if (rows.length === 0) continue;
        const stroke = color.get(name)!;
        const xs = rows.map((i) => panel.x.map(budgetCol[i]));
        const data = (i: number) => ({
          "data-strategy": name,
          "data-budget": String(budgetCol[i]),
          "data-k": String(k),
          "data-gamma": String(gamma),
        });

        const bandTop = rows.map((i) => panel.y.map(highCol[i]));
        const bandBottom = rows.map((i) => panel.y.map(lowCol[i]));
        const ring = polylinePoints(
          [...xs, ...[...xs].reverse()],
          [...bandTop, ...[...bandBottom].reverse()],
        );
        parts.push(
          tag("polygon", {
            class: "improvement-band",
            "data-strategy": name,
            "data-k": String(k),
            "data-gamma": String(gamma),
            points: ring,
            fill: stroke,
            "fill-opacity": 0.15,
            stroke: "none",
          }),
        );
        parts.push(
          tag("polyline", {
            class: "improvement-line",
            "data-strategy": name,
            "data-k": String(k),
            "data-gamma": String(gamma),
            points: polylinePoints(xs, rows.map((i) => panel.y.map(meanCol[i]))),
            fill: "none",
            stroke,
            "stroke-width": 1.8,
          }),
        );
        rows.forEach((i, j) => {
          parts.push(
            tag("line", {
              class: "improvement-interval",
              ...data(i),
              x1: xs[j],
              y1: panel.y.map(highCol[i]),
              x2: xs[j],
              y2: panel.y.map(lowCol[i]),
              stroke,
              "stroke-width": 1.4,
            }),
          );
          parts.push(
            tag("circle", {
              class: "improvement-point",
              ...data(i),
              cx: xs[j],
              cy: panel.y.map(meanCol[i]),
              r: 3,
              fill: stroke,
            }),
          );
        });
      }
    }
  }

  return svgDocument(width, height, parts.join(""));
}

// ── estimation: truth with estimate spread, and error by budget ─────────

export function plotEstimation(tables: Table[], labels: AxisLabels = {}): string {
  const merged = mergeChecked(tables, ESTIMATION_COLUMNS, "estimation");
  const tCol = numbers(merged, "t");
  const budgetCol = numbers(merged, "budget");
  const truthCol = numbers(merged, "mu_true");
  const hatCol = numbers(merged, "mu_hat");

  const budgets = sortedUnique(budgetCol);
  const color = new Map(budgets.map((budget, i) => [budget, PALETTE[i % PALETTE.length]]));

  // left panel: per (budget, t): mean truth, min and max estimate
  interface Cell {
    truthSum: number;
    n: number;
    lo: number;
    hi: number;
  }
  const groups = new Map<number, Map<number, Cell>>();
  for (let i = 0; i < budgetCol.length; i++) {
    let byT = groups.get(budgetCol[i]);
    if (!byT) groups.set(budgetCol[i], (byT = new Map()));
    const cell = byT.get(tCol[i]) ?? { truthSum: 0, n: 0, lo: Infinity, hi: -Infinity };
    cell.truthSum += truthCol[i];
    cell.n += 1;
    cell.lo = Math.min(cell.lo, hatCol[i]);
    cell.hi = Math.max(cell.hi, hatCol[i]);
    byT.set(tCol[i], cell);
  }

  let leftLo = Infinity;
  let leftHi = -Infinity;
  const series = budgets.map((budget) => {
    const byT = groups.get(budget)!;
    const ts = sortedUnique(Array.from(byT.keys()));
    const cells = ts.map((t) => byT.get(t)!);
    for (const cell of cells) {
      leftLo = Math.min(leftLo, cell.lo, cell.truthSum / cell.n);
      leftHi = Math.max(leftHi, cell.hi, cell.truthSum / cell.n);
    }
    return { budget, ts, cells };
  });
  const leftPad = (leftHi - leftLo) * 0.05;

  const allTs = sortedUnique(tCol);
  const left = makePanel(
    66,
    44,
    330,
    300,
    [allTs[0], allTs[allTs.length - 1]],
    [leftLo - leftPad, leftHi + leftPad],
  );

  const parts: string[] = [];
  parts.push(
    tag("text", { x: left.left, y: left.top - 26, fill: "#111111", "font-weight": "bold" },
      "estimates around the truth"),
  );
  parts.push(axes(left, labels.x ?? "time step", labels.y ?? "prevalence"));

  for (const { budget, ts, cells } of series) {
    const stroke = color.get(budget)!;
    const xs = ts.map((t) => left.x.map(t));
    const ring = polylinePoints(
      [...xs, ...[...xs].reverse()],
      [...cells.map((c) => left.y.map(c.hi)), ...[...cells.map((c) => left.y.map(c.lo))].reverse()],
    );
    parts.push(
      tag("polygon", {
        class: "estimate-band",
        "data-budget": String(budget),
        points: ring,
        fill: stroke,
        "fill-opacity": 0.18,
        stroke: "none",
      }),
    );
    parts.push(
      tag("polyline", {
        class: "truth-line",
        "data-budget": String(budget),
        points: polylinePoints(xs, cells.map((c) => left.y.map(c.truthSum / c.n))),
        fill: "none",
        stroke,
        "stroke-width": 1.6,
        "stroke-dasharray": "5 3",
      }),
    );
  }
  budgets.forEach((budget, i) => {
    parts.push(
      legendEntry(left.left + 10, left.top + 12 + i * 18, color.get(budget)!, `budget ${budget}`),
    );
  });

  // right panel: estimate-minus-truth values, one column of dots per budget
  const errorsByBudget = new Map<number, number[]>();
  for (const budget of budgets) errorsByBudget.set(budget, []);
  for (let i = 0; i < budgetCol.length; i++) {
    errorsByBudget.get(budgetCol[i])!.push(hatCol[i] - truthCol[i]);
  }
  let maxAbs = 0;
  for (const errors of errorsByBudget.values()) {
    for (const err of errors) maxAbs = Math.max(maxAbs, Math.abs(err));
  }
  const rightLimit = maxAbs * 1.05;

  const right = makePanel(
    left.left + left.width + 110,
    44,
    300,
    300,
    [-0.5, budgets.length - 0.5],
    [-rightLimit, rightLimit],
  );
  const xTicks: AxisTick[] = budgets.map((budget, i) => ({ at: i, label: String(budget) }));
  parts.push(
    tag("text", { x: right.left, y: right.top - 26, fill: "#111111", "font-weight": "bold" },
      "estimate minus truth by budget"),
  );
  parts.push(axes(right, "tests per step (budget)", "estimate error", xTicks));
  parts.push(referenceLine(right, 0));

  budgets.forEach((budget, index) => {
    const errors = errorsByBudget.get(budget)!;
    const stroke = color.get(budget)!;
    const halfBand = (right.x.map(1) - right.x.map(0)) * 0.35;
    errors.forEach((err, i) => {
      const offset = errors.length === 1 ? 0 : ((i + 0.5) / errors.length - 0.5) * 2 * halfBand;
      parts.push(
        tag("circle", {
          class: "error-dot",
          "data-budget": String(budget),
          cx: right.x.map(index) + offset,
          cy: right.y.map(err),
          r: 1.4,
          fill: stroke,
          "fill-opacity": 0.3,
        }),
      );
    });
    const mean = errors.reduce((acc, v) => acc + v, 0) / errors.length;
    parts.push(
      tag("line", {
        class: "error-mean",
        "data-budget": String(budget),
        x1: right.x.map(index) - halfBand,
        y1: right.y.map(mean),
        x2: right.x.map(index) + halfBand,
        y2: right.y.map(mean),
        stroke,
        "stroke-width": 2.5,
      }),
    );
  });

  return svgDocument(right.left + right.width + 24, 430, parts.join(""));
}

// ── dispatch ────────────────────────────────────────────────────────────

/** Parse raw CSV texts and render the requested figure kind. */
export function renderFigure(kind: FigureKind, csvTexts: string[], labels: AxisLabels = {}): string {
  if (csvTexts.length === 0) throw new Error("no input CSVs given");
  const tables = csvTexts.map(parseCsv);
  switch (kind) {
    case "testing_effect":
      return plotTestingEffect(tables, labels);
    case "improvement":
      return plotImprovement(tables, labels);
    case "estimation":
      return plotEstimation(tables, labels);
    default:
      throw new Error(`unknown figure kind: ${kind as string}`);
  }
}
