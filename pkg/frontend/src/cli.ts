#!/usr/bin/env node
/**
 * cosrec-viz plot-filters <csv-dir> <out.svg>
 * cosrec-viz plot-training <log-file> <out.svg>
 */

import { readFileSync, writeFileSync } from "node:fs";

import { renderTrainingCurves } from "./curves.js";
import { loadFilterExport } from "./filters.js";
import { renderFilterSheet } from "./heatmap.js";
import { parseTrainingLog } from "./logs.js";

const USAGE =
  "usage: cosrec-viz plot-filters <csv-dir> <out.svg>\n" +
  "       cosrec-viz plot-training <log-file> <out.svg>\n";

export function main(argv: string[]): number {
  const [command, input, output] = argv;
  if (!command || !input || !output || argv.length !== 3) {
    process.stderr.write(USAGE);
    return 2;
  }
  try {
    if (command === "plot-filters") {
      writeFileSync(output, renderFilterSheet(loadFilterExport(input)));
    } else if (command === "plot-training") {
      let text: string;
      try {
        text = readFileSync(input, "utf8");
      } catch {
        throw new Error(`cannot read ${input}`);
      }
      const { svg, warnings } = renderTrainingCurves(parseTrainingLog(text));
      for (const warning of warnings) {
        process.stderr.write(`warning: ${warning}\n`);
      }
      writeFileSync(output, svg);
    } else {
      process.stderr.write(USAGE);
      return 2;
    }
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
  return 0;
}

// argv[1] is this script when invoked as a program, absent under tests
if (process.argv[1]?.endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
