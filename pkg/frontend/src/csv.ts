/** Parsing of the harness summary CSV (fixed header). */
import { readFileSync } from "fs";
import Papa from "papaparse";

export const SUMMARY_COLUMNS = [
  "cell",
  "estimator",
  "seed",
  "mean",
  "se",
  "ci_low",
  "ci_high",
  "oracle",
  "covered",
] as const;

export interface SummaryRow {
  cell: string;
  estimator: string;
  seed: number;
  mean: number;
  se: number;
  ciLow: number;
  ciHigh: number;
  oracle: number;
  covered: boolean;
}

export interface CellGroup {
  cell: string;
  oracle: number;
  rows: SummaryRow[];
  estimators: string[];
}

export function parseSummaryCsv(path: string): SummaryRow[] {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`cannot parse ${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of SUMMARY_COLUMNS) {
    if (!fields.includes(column)) {
      throw new Error(`missing column '${column}' in ${path}`);
    }
  }
  const rows: SummaryRow[] = [];
  for (const record of parsed.data) {
    if (record.mean === "" || record.mean === undefined) {
      continue; // estimator failed for this seed (support violation)
    }
    rows.push({
      cell: record.cell,
      estimator: record.estimator,
      seed: Number(record.seed),
      mean: Number(record.mean),
      se: Number(record.se),
      ciLow: Number(record.ci_low),
      ciHigh: Number(record.ci_high),
      oracle: Number(record.oracle),
      covered: record.covered === "true",
    });
  }
  if (rows.length === 0) {
    throw new Error(`no usable rows in ${path}`);
  }
  return rows;
}

/** Group rows by cell, preserving first-appearance order. */
export function groupByCell(rows: SummaryRow[], cells?: string[]): CellGroup[] {
  const order: string[] = [];
  const byCell = new Map<string, SummaryRow[]>();
  for (const row of rows) {
    if (!byCell.has(row.cell)) {
      byCell.set(row.cell, []);
      order.push(row.cell);
    }
    byCell.get(row.cell)!.push(row);
  }
  const wanted = cells ?? order;
  return wanted.map((cell) => {
    const cellRows = byCell.get(cell);
    if (!cellRows) {
      throw new Error(`unknown cell '${cell}' (have: ${order.join(", ")})`);
    }
    const estimators: string[] = [];
    for (const row of cellRows) {
      if (!estimators.includes(row.estimator)) {
        estimators.push(row.estimator);
      }
    }
    return { cell, oracle: cellRows[0].oracle, rows: cellRows, estimators };
  });
}
