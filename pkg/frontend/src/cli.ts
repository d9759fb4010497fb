#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { FIGURES } from "./figures.js";
import { plotCsv } from "./plot.js";

const USAGE = `usage: figure-plots plot --csv <path> --figure <id> --out <path>

Regenerates one benchmark figure from a results CSV written by the
mmwave-chanest bench runner.  Only aggregate rows (trial = -1) are
plotted.  Figures: ${Object.keys(FIGURES).join(", ")}.`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        csv: { type: "string" },
        figure: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  if (parsed.values.help) {
    console.log(USAGE);
    return 0;
  }
  const [command] = parsed.positionals;
  const { csv, figure, out } = parsed.values;
  if (command !== "plot" || !csv || !figure || !out) {
    console.error(USAGE);
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(csv, "utf8");
  } catch (err) {
    console.error(`error: cannot read '${csv}': ${(err as Error).message}`);
    return 1;
  }
  let svg: string;
  try {
    svg = plotCsv(text, figure);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  writeFileSync(out, svg);
  console.log(`wrote ${out}`);
  return 0;
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}
