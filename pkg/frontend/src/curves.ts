/**
 * Parsing of the curve CSV schema written by the sampler benchmarks:
 * header `t,dbar,se`, one row per integer t, t strictly increasing.
 */

import { readFileSync } from "node:fs";
import { basename } from "node:path";

export interface CurvePoint {
  t: number;
  dbar: number;
  se: number;
}

export interface CurveFile {
  /** label segments recovered from the file name (separator "__") */
  segments: string[];
  path: string;
  points: CurvePoint[];
}

export class CsvFormatError extends Error {
  constructor(file: string, line: number, detail: string) {
    super(`${file}:${line}: ${detail}`);
    this.name = "CsvFormatError";
  }
}

export function labelSegments(path: string, prefix: string, suffix: string): string[] {
  const name = basename(path);
  if (!name.startsWith(prefix) || !name.endsWith(suffix)) {
    throw new Error(`file name ${name} does not match ${prefix}*${suffix}`);
  }
  return name.slice(prefix.length, name.length - suffix.length).split("__");
}

export function parseCurveCsv(text: string, path: string): CurveFile {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvFormatError(path, 1, "empty file");
  }
  if (lines[0] !== "t,dbar,se") {
    throw new CsvFormatError(path, 1, `expected header "t,dbar,se", got "${lines[0]}"`);
  }
  const points: CurvePoint[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 3) {
      throw new CsvFormatError(path, i + 1, `expected 3 fields, got ${parts.length}`);
    }
    const [t, dbar, se] = parts.map(Number);
    if (!Number.isFinite(t) || !Number.isFinite(dbar) || !Number.isFinite(se)) {
      throw new CsvFormatError(path, i + 1, `non-numeric value in "${lines[i]}"`);
    }
    const prev = points[points.length - 1];
    if (prev !== undefined && t <= prev.t) {
      throw new CsvFormatError(path, i + 1, `t must be strictly increasing (${prev.t} -> ${t})`);
    }
    points.push({ t, dbar, se });
  }
  if (points.length === 0) {
    throw new CsvFormatError(path, 2, "no data rows");
  }
  return { segments: labelSegments(path, "curve_", ".csv"), path, points };
}

export function loadCurveFile(path: string): CurveFile {
  return parseCurveCsv(readFileSync(path, "utf8"), path);
}
