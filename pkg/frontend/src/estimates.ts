/** Estimator panels: one panel per cell, points with 95% CI bars per
 * (estimator, seed), and a horizontal oracle line. */
import { writeFileSync } from "fs";
import { CellGroup, groupByCell, parseSummaryCsv } from "./csv.js";
import { LinearScale, SvgBuilder } from "./svg.js";

export interface EstimatesPlotSpec {
  csvPath: string;
  outPath: string;
  cells?: string[];
  estimators?: string[];
  showOracle?: boolean;
}

const PANEL_WIDTH = 260;
const PANEL_HEIGHT = 220;
const MARGIN = { top: 34, right: 14, bottom: 52, left: 52 };
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

function panelValueRange(groups: CellGroup[], showOracle: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const group of groups) {
    for (const row of group.rows) {
      lo = Math.min(lo, row.ciLow);
      hi = Math.max(hi, row.ciHigh);
    }
    if (showOracle) {
      lo = Math.min(lo, group.oracle);
      hi = Math.max(hi, group.oracle);
    }
  }
  const pad = 0.06 * (hi - lo || 1);
  return [lo - pad, hi + pad];
}

export function renderEstimates(spec: EstimatesPlotSpec): string {
  const rows = parseSummaryCsv(spec.csvPath);
  const keep = spec.estimators;
  if (keep !== undefined && keep.length === 0) {
    throw new Error("empty estimator selection");
  }
  const filtered = keep ? rows.filter((r) => keep.includes(r.estimator)) : rows;
  if (filtered.length === 0) {
    throw new Error(`no rows left after estimator filter [${keep?.join(", ")}]`);
  }
  const groups = groupByCell(filtered, spec.cells);
  const showOracle = spec.showOracle ?? true;

  const width = MARGIN.left + groups.length * PANEL_WIDTH + MARGIN.right;
  const height = MARGIN.top + PANEL_HEIGHT + MARGIN.bottom;
  const svg = new SvgBuilder(width, height);
  const [lo, hi] = panelValueRange(groups, showOracle);
  const yScale = new LinearScale(lo, hi, MARGIN.top + PANEL_HEIGHT, MARGIN.top);

  svg.text("off-policy estimates with 95% confidence intervals", {
    x: width / 2,
    y: 16,
    "text-anchor": "middle",
    class: "figure-title",
    "font-size": 13,
  });
  svg.text("estimated reward", {
    x: 14,
    y: MARGIN.top + PANEL_HEIGHT / 2,
    transform: `rotate(-90 14 ${MARGIN.top + PANEL_HEIGHT / 2})`,
    "text-anchor": "middle",
    class: "axis-label",
    "font-size": 11,
  });

  groups.forEach((group, panelIndex) => {
    const x0 = MARGIN.left + panelIndex * PANEL_WIDTH;
    svg.open("g", { class: "panel", "data-cell": group.cell });
    svg.element("rect", {
      x: x0,
      y: MARGIN.top,
      width: PANEL_WIDTH - 18,
      height: PANEL_HEIGHT,
      fill: "none",
      stroke: "#999",
      "stroke-width": 1,
      class: "panel-frame",
    });
    svg.text(group.cell, {
      x: x0 + (PANEL_WIDTH - 18) / 2,
      y: MARGIN.top - 6,
      "text-anchor": "middle",
      class: "panel-title",
      "font-size": 12,
    });

    if (panelIndex === 0) {
      for (const tick of yScale.ticks()) {
        const y = yScale.map(tick);
        svg.element("line", {
          x1: x0 - 4,
          x2: x0,
          y1: y,
          y2: y,
          stroke: "#333",
          class: "tick-mark",
        });
        svg.text(tick.toPrecision(3), {
          x: x0 - 7,
          y: y + 3.5,
          "text-anchor": "end",
          class: "tick-label",
          "font-size": 9,
        });
      }
    }

    if (showOracle) {
      svg.element("line", {
        x1: x0,
        x2: x0 + PANEL_WIDTH - 18,
        y1: yScale.map(group.oracle),
        y2: yScale.map(group.oracle),
        stroke: "#d62728",
        "stroke-dasharray": "5,3",
        "stroke-width": 1.2,
        class: "oracle-line",
      });
    }

    const groupWidth = (PANEL_WIDTH - 18) / group.estimators.length;
    const seeds = [...new Set(group.rows.map((r) => r.seed))].sort((a, b) => a - b);
    for (const row of group.rows) {
      const estimatorIndex = group.estimators.indexOf(row.estimator);
      const seedIndex = seeds.indexOf(row.seed);
      const jitter = seeds.length > 1 ? ((seedIndex + 0.5) / seeds.length - 0.5) * groupWidth * 0.7 : 0;
      const x = x0 + (estimatorIndex + 0.5) * groupWidth + jitter;
      const color = COLORS[estimatorIndex % COLORS.length];
      svg.element("line", {
        x1: x,
        x2: x,
        y1: yScale.map(row.ciLow),
        y2: yScale.map(row.ciHigh),
        stroke: color,
        "stroke-width": 1.2,
        class: "ci-bar",
        "data-estimator": row.estimator,
        "data-seed": row.seed,
      });
      svg.element("circle", {
        cx: x,
        cy: yScale.map(row.mean),
        r: 2.4,
        fill: color,
        class: "estimate-point",
        "data-estimator": row.estimator,
        "data-seed": row.seed,
      });
    }

    group.estimators.forEach((estimator, estimatorIndex) => {
      svg.text(estimator, {
        x: x0 + (estimatorIndex + 0.5) * groupWidth,
        y: MARGIN.top + PANEL_HEIGHT + 16,
        "text-anchor": "middle",
        class: "estimator-label",
        "font-size": 10,
      });
    });
    svg.close("g");
  });

  return svg.render();
}

export function plotEstimates(spec: EstimatesPlotSpec): string {
  const content = renderEstimates(spec);
  writeFileSync(spec.outPath, content);
  return spec.outPath;
}
