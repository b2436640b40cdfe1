/**
 * Figure renderer for the simulator's CSV outputs.
 *
 * Usage:
 *   node dist/cli.js --kind improvement --in summary.csv --out improvement.svg
 *
 * `--in` may repeat to merge several CSVs with the same schema (for
 * example, one trace per budget for the testing-effect figure). Optional
 * `--x-label` / `--y-label` override the default axis titles. Exits 0 on
 * success and 1 on any usage, schema, or I/O problem (in which case no
 * output file is written).
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { FIGURE_KINDS, FigureKind, FigureSpec, renderFigure } from "./figures.js";

export function parseArgs(argv: string[]): FigureSpec {
  let kind: string | undefined;
  let output: string | undefined;
  let xLabel: string | undefined;
  let yLabel: string | undefined;
  const inputs: string[] = [];

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const value = (): string => {
      if (i + 1 >= argv.length) throw new Error(`${arg}: missing value`);
      return argv[++i];
    };
    switch (arg) {
      case "--in":
        inputs.push(value());
        break;
      case "--out":
        output = value();
        break;
      case "--kind":
        kind = value();
        break;
      case "--x-label":
        xLabel = value();
        break;
      case "--y-label":
        yLabel = value();
        break;
      default:
        throw new Error(`unknown argument: ${arg}`);
    }
  }

  if (kind === undefined || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`--kind must be one of: ${FIGURE_KINDS.join(", ")}`);
  }
  if (inputs.length === 0) throw new Error("at least one --in CSV is required");
  if (output === undefined) throw new Error("--out is required");
  return { kind: kind as FigureKind, inputs, output, labels: { x: xLabel, y: yLabel } };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const texts = spec.inputs.map((path) => readFileSync(path, "utf8"));
    const svg = renderFigure(spec.kind, texts, spec.labels);
    writeFileSync(spec.output, svg);
    return 0;
  } catch (error) {
    console.error(`plots: ${error instanceof Error ? error.message : String(error)}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
