/**
 * Small deterministic SVG helpers: fixed styling, no timestamps, no
 * randomness, so identical input always yields byte-identical output.
 */

export type Attrs = Record<string, string | number>;

/** Categorical palette, assigned to series in first-seen order. */
export const PALETTE = [
  "#4269d0",
  "#efb118",
  "#ff725c",
  "#6cc5b0",
  "#3ca951",
  "#ff8ab7",
  "#a463f2",
  "#97bbf5",
];

/** Pixel values rounded to 1/100 so output does not depend on FP noise. */
export function px(value: number): string {
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tag(name: string, attrs: Attrs, body = ""): string {
  let out = `<${name}`;
  for (const [key, value] of Object.entries(attrs)) {
    out += ` ${key}="${typeof value === "number" ? px(value) : esc(value)}"`;
  }
  return body === "" ? `${out}/>` : `${out}>${body}</${name}>`;
}

export function svgDocument(width: number, height: number, body: string): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica,Arial,sans-serif" font-size="11">`;
  const background = tag("rect", { x: 0, y: 0, width, height, fill: "#ffffff" });
  return `${head}${background}${body}</svg>\n`;
}

// ── scales and ticks ────────────────────────────────────────────────────

export interface Scale {
  domain: [number, number];
  range: [number, number];
  map(value: number): number;
}

/** Linear scale; a zero-width domain is padded by one unit on each side. */
export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const [r0, r1] = range;
  const slope = (r1 - r0) / (d1 - d0);
  return {
    domain: [d0, d1],
    range: [r0, r1],
    map: (value: number) => r0 + (value - d0) * slope,
  };
}

/** Round tick positions covering [lo, hi] with a 1/2/5 step. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const rawStep = span / Math.max(1, count);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const fraction = rawStep / power;
  const step = (fraction < 1.5 ? 1 : fraction < 3.5 ? 2 : fraction < 7.5 ? 5 : 10) * power;
  const decimals = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  const values: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    values.push(Number(v.toFixed(decimals)));
  }
  return values;
}

// ── panels and axes ─────────────────────────────────────────────────────

export interface Panel {
  left: number;
  top: number;
  width: number;
  height: number;
  x: Scale;
  y: Scale;
}

export function makePanel(
  left: number,
  top: number,
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
): Panel {
  return {
    left,
    top,
    width,
    height,
    x: linearScale(xDomain, [left, left + width]),
    y: linearScale(yDomain, [top + height, top]),
  };
}

export interface AxisTick {
  at: number;
  label: string;
}

/** Left + bottom axis lines with ticks, tick labels, and axis titles. */
export function axes(panel: Panel, xLabel: string, yLabel: string, xTicks?: AxisTick[]): string {
  const bottom = panel.top + panel.height;
  const parts: string[] = [];
  const line = (x1: number, y1: number, x2: number, y2: number) =>
    tag("line", { x1, y1, x2, y2, stroke: "#333333", "stroke-width": 1 });

  parts.push(line(panel.left, bottom, panel.left + panel.width, bottom));
  parts.push(line(panel.left, panel.top, panel.left, bottom));

  const xTickList =
    xTicks ??
    ticks(panel.x.domain[0], panel.x.domain[1]).map((value) => ({ at: value, label: String(value) }));
  for (const { at, label } of xTickList) {
    const x = panel.x.map(at);
    parts.push(line(x, bottom, x, bottom + 4));
    parts.push(
      tag("text", { x, y: bottom + 16, "text-anchor": "middle", fill: "#333333" }, esc(label)),
    );
  }
  for (const value of ticks(panel.y.domain[0], panel.y.domain[1])) {
    const y = panel.y.map(value);
    parts.push(line(panel.left - 4, y, panel.left, y));
    parts.push(
      tag(
        "text",
        { x: panel.left - 7, y: y + 3.5, "text-anchor": "end", fill: "#333333" },
        esc(String(value)),
      ),
    );
  }

  parts.push(
    tag(
      "text",
      {
        x: panel.left + panel.width / 2,
        y: bottom + 32,
        "text-anchor": "middle",
        fill: "#111111",
      },
      esc(xLabel),
    ),
  );
  const yTitleX = panel.left - 40;
  const yTitleY = panel.top + panel.height / 2;
  parts.push(
    tag(
      "text",
      {
        x: yTitleX,
        y: yTitleY,
        "text-anchor": "middle",
        fill: "#111111",
        transform: `rotate(-90 ${px(yTitleX)} ${px(yTitleY)})`,
      },
      esc(yLabel),
    ),
  );
  return parts.join("");
}

/** Horizontal reference line across a panel (used for zero lines). */
export function referenceLine(panel: Panel, value: number): string {
  const y = panel.y.map(value);
  return tag("line", {
    class: "reference-line",
    x1: panel.left,
    y1: y,
    x2: panel.left + panel.width,
    y2: y,
    stroke: "#888888",
    "stroke-width": 1,
    "stroke-dasharray": "4 3",
  });
}

export function polylinePoints(xs: number[], ys: number[]): string {
  const pairs: string[] = [];
  for (let i = 0; i < xs.length; i++) pairs.push(`${px(xs[i])},${px(ys[i])}`);
  return pairs.join(" ");
}
