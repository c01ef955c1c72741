#!/usr/bin/env node
/** `plot` command line: regenerate figures from harness artifacts. */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { plotEstimates } from "./estimates.js";
import { plotBiasCurves } from "./curves.js";

function run(action: () => string): void {
  try {
    console.log(action());
  } catch (err) {
    console.error((err as Error).message);
    process.exitCode = 1;
  }
}

export function buildCli(argv: string[]) {
  return yargs(argv)
    .scriptName("plot")
    .command(
      "estimates",
      "panels of estimator means with CI bars and oracle lines from a summary CSV",
      (y) =>
        y
          .option("csv", { type: "string", demandOption: true, describe: "harness summary.csv" })
          .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
          .option("cells", { type: "string", describe: "comma-separated cell ids (default: all)" })
          .option("estimators", { type: "string", describe: "comma-separated estimator filter" })
          .option("no-oracle", { type: "boolean", default: false, describe: "hide oracle lines" }),
      (args) => {
        run(() =>
          plotEstimates({
            csvPath: args.csv,
            outPath: args.out,
            cells: args.cells ? args.cells.split(",").map((s) => s.trim()) : undefined,
            estimators: args.estimators
              ? args.estimators.split(",").map((s) => s.trim()).filter((s) => s.length > 0)
              : undefined,
            showOracle: !args["no-oracle"],
          }),
        );
      },
    )
    .command(
      "curves",
      "overlay fitted position-bias curves against the 1/k reference",
      (y) =>
        y
          .option("curves", {
            type: "string",
            array: true,
            demandOption: true,
            describe: "curve JSON files",
          })
          .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
          .option("no-reference", { type: "boolean", default: false, describe: "hide the 1/k line" }),
      (args) => {
        run(() =>
          plotBiasCurves({
            curvePaths: args.curves as string[],
            outPath: args.out,
            showReference: !args["no-reference"],
          }),
        );
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? err?.message ?? "unknown error");
      process.exit(1);
    });
}

const isMain = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (isMain) {
  buildCli(hideBin(process.argv)).parseSync();
}
