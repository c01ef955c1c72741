import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { dirname, join } from "path";
import { fileURLToPath } from "url";
import { describe, expect, it } from "vitest";
import { groupByCell, parseSummaryCsv } from "../src/csv.js";
import { plotEstimates, renderEstimates } from "../src/estimates.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURE_CSV = join(HERE, "fixtures", "summary.csv");

function countMatches(svg: string, pattern: RegExp): number {
  return (svg.match(pattern) ?? []).length;
}

describe("summary CSV parsing", () => {
  it("reads the harness fixture", () => {
    const rows = parseSummaryCsv(FIXTURE_CSV);
    // 3 cells x 4 estimators x 2 seeds from the mini coverage run
    expect(rows.length).toBe(24);
    expect(new Set(rows.map((r) => r.cell))).toEqual(
      new Set(["no-pin", "pin-nocorr", "pin-corrected"]),
    );
    for (const row of rows) {
      expect(row.ciLow).toBeLessThanOrEqual(row.mean);
      expect(row.mean).toBeLessThanOrEqual(row.ciHigh);
    }
  });

  it("groups rows by cell in order", () => {
    const groups = groupByCell(parseSummaryCsv(FIXTURE_CSV));
    expect(groups.map((g) => g.cell)).toEqual(["no-pin", "pin-nocorr", "pin-corrected"]);
    expect(groups[0].estimators).toEqual(["pbm", "ipm", "interpol(1)", "interpol(3)"]);
  });

  it("rejects a CSV with missing columns", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "cell,estimator,mean\na,pbm,1.0\n");
    expect(() => parseSummaryCsv(bad)).toThrow(/missing column/);
  });

  it("rejects unknown cell ids", () => {
    const rows = parseSummaryCsv(FIXTURE_CSV);
    expect(() => groupByCell(rows, ["nope"])).toThrow(/unknown cell/);
  });
});

describe("estimate panels", () => {
  const svg = renderEstimates({ csvPath: FIXTURE_CSV, outPath: "/dev/null" });

  it("renders one panel per cell with a frame and title", () => {
    expect(countMatches(svg, /class="panel"/g)).toBe(3);
    expect(countMatches(svg, /class="panel-frame"/g)).toBe(3);
    expect(svg).toContain('data-cell="no-pin"');
    expect(svg).toContain('data-cell="pin-corrected"');
  });

  it("draws one CI bar and one point per row", () => {
    expect(countMatches(svg, /class="ci-bar"/g)).toBe(24);
    expect(countMatches(svg, /class="estimate-point"/g)).toBe(24);
  });

  it("draws one oracle line per panel", () => {
    expect(countMatches(svg, /class="oracle-line"/g)).toBe(3);
  });

  it("labels every estimator on each panel", () => {
    expect(countMatches(svg, /class="estimator-label"/g)).toBe(12);
    expect(svg).toContain(">interpol(3)</text>");
    expect(svg).toContain(">pbm</text>");
  });

  it("has a y-axis label and tick labels", () => {
    expect(svg).toContain("estimated reward");
    expect(countMatches(svg, /class="tick-label"/g)).toBeGreaterThanOrEqual(3);
  });

  it("positions CI bars consistently with the data", () => {
    const rows = parseSummaryCsv(FIXTURE_CSV);
    const wide = rows.reduce((a, b) => (a.ciHigh - a.ciLow > b.ciHigh - b.ciLow ? a : b));
    const narrow = rows.reduce((a, b) => (a.ciHigh - a.ciLow < b.ciHigh - b.ciLow ? a : b));
    const barLengths = [...svg.matchAll(/class="ci-bar" data-estimator="([^"]+)" data-seed="(\d+)"/g)];
    expect(barLengths.length).toBe(24);
    const lengthOf = (estimator: string, seed: number) => {
      const match = svg.match(
        new RegExp(
          `x1="[^"]+" x2="[^"]+" y1="([^"]+)" y2="([^"]+)" stroke="[^"]+" stroke-width="[^"]+" class="ci-bar" data-estimator="${estimator.replace(/[()]/g, "\\$&")}" data-seed="${seed}"`,
        ),
      );
      expect(match).not.toBeNull();
      return Math.abs(Number(match![1]) - Number(match![2]));
    };
    expect(lengthOf(wide.estimator, wide.seed)).toBeGreaterThan(lengthOf(narrow.estimator, narrow.seed));
  });

  it("supports cell selection", () => {
    const single = renderEstimates({
      csvPath: FIXTURE_CSV,
      outPath: "/dev/null",
      cells: ["no-pin"],
      estimators: ["ipm"],
    });
    expect(countMatches(single, /class="panel"/g)).toBe(1);
    expect(countMatches(single, /class="estimate-point"/g)).toBe(2); // 2 seeds
  });

  it("rejects an empty estimator selection", () => {
    expect(() =>
      renderEstimates({ csvPath: FIXTURE_CSV, outPath: "/dev/null", estimators: [] }),
    ).toThrow(/empty estimator selection/);
  });

  it("writes the SVG file", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const out = join(dir, "fig1.svg");
    plotEstimates({ csvPath: FIXTURE_CSV, outPath: out });
    const content = readFileSync(out, "utf-8");
    expect(content.startsWith("<svg")).toBe(true);
    expect(content).toContain("</svg>");
  });
});
