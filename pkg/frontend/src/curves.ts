/** Position-bias curve overlays: fitted curves plus the true 1/k line. */
import { readFileSync, writeFileSync } from "fs";
import { basename } from "path";
import { LinearScale, SvgBuilder } from "./svg.js";

export interface CurvesPlotSpec {
  curvePaths: string[];
  outPath: string;
  showReference?: boolean;
}

const WIDTH = 460;
const HEIGHT = 300;
const MARGIN = { top: 30, right: 130, bottom: 44, left: 56 };
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

export function loadCurve(path: string): number[] {
  let values: unknown;
  try {
    values = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot read curve file ${path}: ${(err as Error).message}`);
  }
  if (!Array.isArray(values) || values.length === 0 || values.some((v) => typeof v !== "number")) {
    throw new Error(`curve file ${path} must hold a nonempty JSON array of numbers`);
  }
  return values as number[];
}

function polylinePoints(values: number[], xScale: LinearScale, yScale: LinearScale): string {
  return values
    .map((v, i) => `${xScale.map(i + 1).toFixed(2)},${yScale.map(v).toFixed(2)}`)
    .join(" ");
}

export function renderCurves(spec: CurvesPlotSpec): string {
  if (spec.curvePaths.length === 0) {
    throw new Error("no curve files given");
  }
  const curves = spec.curvePaths.map((path) => ({ name: basename(path, ".json"), values: loadCurve(path) }));
  const n = curves[0].values.length;
  for (const curve of curves) {
    if (curve.values.length !== n) {
      throw new Error(`curve length mismatch: ${curve.name} has ${curve.values.length}, expected ${n}`);
    }
  }
  const showReference = spec.showReference ?? true;
  const reference = Array.from({ length: n }, (_, i) => 1 / (i + 1));

  const allValues = curves.flatMap((c) => c.values).concat(showReference ? reference : []);
  const hi = Math.max(...allValues) * 1.06;
  const xScale = new LinearScale(1, n, MARGIN.left, WIDTH - MARGIN.right);
  const yScale = new LinearScale(0, hi, HEIGHT - MARGIN.bottom, MARGIN.top);

  const svg = new SvgBuilder(WIDTH, HEIGHT);
  svg.text("estimated position-bias curves", {
    x: (MARGIN.left + WIDTH - MARGIN.right) / 2,
    y: 16,
    "text-anchor": "middle",
    class: "figure-title",
    "font-size": 13,
  });
  svg.element("rect", {
    x: MARGIN.left,
    y: MARGIN.top,
    width: WIDTH - MARGIN.left - MARGIN.right,
    height: HEIGHT - MARGIN.top - MARGIN.bottom,
    fill: "none",
    stroke: "#999",
    class: "plot-frame",
  });
  svg.text("position", {
    x: (MARGIN.left + WIDTH - MARGIN.right) / 2,
    y: HEIGHT - 8,
    "text-anchor": "middle",
    class: "axis-label",
    "font-size": 11,
  });
  svg.text("position bias", {
    x: 16,
    y: HEIGHT / 2,
    transform: `rotate(-90 16 ${HEIGHT / 2})`,
    "text-anchor": "middle",
    class: "axis-label",
    "font-size": 11,
  });

  for (let k = 1; k <= n; k++) {
    svg.text(String(k), {
      x: xScale.map(k),
      y: HEIGHT - MARGIN.bottom + 16,
      "text-anchor": "middle",
      class: "tick-label",
      "font-size": 9,
    });
  }
  for (const tick of yScale.ticks()) {
    svg.text(tick.toPrecision(2), {
      x: MARGIN.left - 6,
      y: yScale.map(tick) + 3.5,
      "text-anchor": "end",
      class: "tick-label",
      "font-size": 9,
    });
  }

  if (showReference) {
    svg.element("polyline", {
      points: polylinePoints(reference, xScale, yScale),
      fill: "none",
      stroke: "#d62728",
      "stroke-dasharray": "5,3",
      "stroke-width": 1.4,
      class: "reference-line",
    });
    svg.text("1/k", {
      x: WIDTH - MARGIN.right + 8,
      y: yScale.map(reference[n - 1]) + 4,
      class: "legend-label",
      "data-series": "reference",
      "font-size": 10,
      fill: "#d62728",
    });
  }

  curves.forEach((curve, index) => {
    const color = COLORS[index % COLORS.length];
    svg.element("polyline", {
      points: polylinePoints(curve.values, xScale, yScale),
      fill: "none",
      stroke: color,
      "stroke-width": 1.4,
      class: "curve-line",
      "data-series": curve.name,
    });
    svg.text(curve.name, {
      x: WIDTH - MARGIN.right + 8,
      y: MARGIN.top + 14 + index * 14,
      class: "legend-label",
      "data-series": curve.name,
      "font-size": 10,
      fill: color,
    });
  });

  return svg.render();
}

export function plotBiasCurves(spec: CurvesPlotSpec): string {
  const content = renderCurves(spec);
  writeFileSync(spec.outPath, content);
  return spec.outPath;
}
