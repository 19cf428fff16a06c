/**
 * Report generator: --curves <files/dirs> --summaries <files/dirs> --out <dir>.
 * Renders figure.svg from curve CSVs and table.md from summary JSONs.
 */

import { mkdirSync, readdirSync, statSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";

import { loadCurveFile } from "./curves.js";
import { renderFigure } from "./figure.js";
import { loadSummaryFile } from "./summaries.js";
import { renderMarkdownTable } from "./table.js";

function expand(paths: string[], prefix: string, suffix: string): string[] {
  const out: string[] = [];
  for (const path of paths) {
    if (statSync(path).isDirectory()) {
      for (const name of readdirSync(path).sort()) {
        if (name.startsWith(prefix) && name.endsWith(suffix)) {
          out.push(join(path, name));
        }
      }
    } else {
      out.push(path);
    }
  }
  return out;
}

interface Args {
  curves: string[];
  summaries: string[];
  out: string;
  epsilon: number;
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { curves: [], summaries: [], out: "report", epsilon: 0.1 };
  let target: "curves" | "summaries" | null = null;
  for (let i = 0; i < argv.length; i++) {
    const token = argv[i];
    if (token === "--curves") {
      target = "curves";
    } else if (token === "--summaries") {
      target = "summaries";
    } else if (token === "--out") {
      args.out = argv[++i];
      target = null;
    } else if (token === "--epsilon") {
      args.epsilon = Number(argv[++i]);
      target = null;
    } else if (token.startsWith("--")) {
      throw new Error(`unknown flag ${token}`);
    } else if (target !== null) {
      args[target].push(token);
    } else {
      throw new Error(`unexpected argument ${token}`);
    }
  }
  if (args.curves.length === 0 && args.summaries.length === 0) {
    throw new Error(
      "usage: report --curves <csv files or dirs> --summaries <json files or dirs> [--out DIR] [--epsilon X]",
    );
  }
  return args;
}

export function run(argv: string[]): string[] {
  const args = parseArgs(argv);
  mkdirSync(args.out, { recursive: true });
  const written: string[] = [];
  const curvePaths = expand(args.curves, "curve_", ".csv");
  if (curvePaths.length > 0) {
    const curves = curvePaths.map(loadCurveFile);
    const svg = renderFigure(curves, { epsilon: args.epsilon });
    const path = join(args.out, "figure.svg");
    writeFileSync(path, svg);
    written.push(path);
  }
  const summaryPaths = expand(args.summaries, "summary_", ".json");
  if (summaryPaths.length > 0) {
    const summaries = summaryPaths.map(loadSummaryFile);
    const md = renderMarkdownTable(summaries);
    const path = join(args.out, "table.md");
    writeFileSync(path, md);
    written.push(path);
  }
  return written;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  basename(process.argv[1]) === basename(new URL(import.meta.url).pathname);
if (invokedDirectly) {
  try {
    for (const path of run(process.argv.slice(2))) {
      console.log(`wrote ${path}`);
    }
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(2);
  }
}
