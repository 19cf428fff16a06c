/**
 * Parsing of the mixing-time summary JSON schema
 * `{epsilon, t_mix_upper, n_used, n_censored, L}`; the cell identity
 * (scheme / kernel / p and ratio) comes from the file name.
 */

import { readFileSync } from "node:fs";

import { labelSegments } from "./curves.js";

const KERNELS = new Set(["da", "cg", "da_mod", "da_marginal"]);

export interface SummaryFile {
  scheme: string;
  kernel: string;
  cell: string; // trailing label segment, e.g. "p50_r0.2"
  p: number | null;
  ratio: number | null;
  epsilon: number;
  tMixUpper: number;
  nUsed: number;
  nCensored: number;
  lag: number;
  path: string;
}

export function parseSummary(text: string, path: string): SummaryFile {
  const raw = JSON.parse(text) as Record<string, unknown>;
  for (const key of ["epsilon", "t_mix_upper", "n_used", "n_censored", "L"]) {
    if (typeof raw[key] !== "number") {
      throw new Error(`${path}: missing numeric field "${key}"`);
    }
  }
  const segments = labelSegments(path, "summary_", ".json");
  const kernelIdx = segments.findIndex((s) => KERNELS.has(s));
  if (kernelIdx < 0) {
    throw new Error(`${path}: no kernel segment in label ${segments.join("/")}`);
  }
  const cell = segments.slice(kernelIdx + 1).join("/") || "";
  const match = cell.match(/^p(\d+)_r([\d.]+)$/);
  return {
    scheme: segments.slice(0, kernelIdx).join("/"),
    kernel: segments[kernelIdx],
    cell,
    p: match ? Number(match[1]) : null,
    ratio: match ? Number(match[2]) : null,
    epsilon: raw.epsilon as number,
    tMixUpper: raw.t_mix_upper as number,
    nUsed: raw.n_used as number,
    nCensored: raw.n_censored as number,
    lag: raw.L as number,
    path,
  };
}

export function loadSummaryFile(path: string): SummaryFile {
  return parseSummary(readFileSync(path, "utf8"), path);
}
