/**
 * Markdown table of mixing-time upper bounds: one row group per prior
 * scheme, one row per kernel, one column per (ratio, p) cell. Missing cells
 * render as an em dash; inputs with differing target levels are rejected.
 */

import type { SummaryFile } from "./summaries.js";

const KERNEL_ORDER = ["da", "da_mod", "da_marginal", "cg"];

function kernelRank(kernel: string): number {
  const idx = KERNEL_ORDER.indexOf(kernel);
  return idx < 0 ? KERNEL_ORDER.length : idx;
}

function columnKey(s: SummaryFile): string {
  return s.ratio !== null && s.p !== null ? `r${s.ratio}_p${s.p}` : s.cell;
}

function columnHeader(s: SummaryFile): string {
  return s.ratio !== null && s.p !== null ? `n/p=${s.ratio}, p=${s.p}` : s.cell;
}

function compareColumns(a: SummaryFile, b: SummaryFile): number {
  if (a.ratio !== null && b.ratio !== null) {
    return a.ratio - b.ratio || (a.p ?? 0) - (b.p ?? 0);
  }
  return columnKey(a) < columnKey(b) ? -1 : columnKey(a) > columnKey(b) ? 1 : 0;
}

export function renderMarkdownTable(summaries: SummaryFile[]): string {
  if (summaries.length === 0) {
    throw new Error("no summary files given");
  }
  const epsilons = new Set(summaries.map((s) => s.epsilon));
  if (epsilons.size > 1) {
    throw new Error(
      `summaries mix target levels: ${[...epsilons].sort().join(", ")}`,
    );
  }
  const epsilon = summaries[0].epsilon;

  const columns: SummaryFile[] = [];
  const seen = new Set<string>();
  for (const s of [...summaries].sort(compareColumns)) {
    const key = columnKey(s);
    if (!seen.has(key)) {
      seen.add(key);
      columns.push(s);
    }
  }
  const schemes = [...new Set(summaries.map((s) => s.scheme))].sort();
  const byCell = new Map<string, SummaryFile>();
  for (const s of summaries) {
    byCell.set(`${s.scheme}|${s.kernel}|${columnKey(s)}`, s);
  }

  const lines: string[] = [];
  lines.push(`Mixing-time upper bounds at TV level ${epsilon}`);
  lines.push("");
  const header = ["Prior", "Method", ...columns.map(columnHeader)];
  lines.push(`| ${header.join(" | ")} |`);
  lines.push(`|${header.map(() => "---").join("|")}|`);
  for (const scheme of schemes) {
    const kernels = [
      ...new Set(summaries.filter((s) => s.scheme === scheme).map((s) => s.kernel)),
    ].sort((a, b) => kernelRank(a) - kernelRank(b) || a.localeCompare(b));
    kernels.forEach((kernel, idx) => {
      const cells = columns.map((col) => {
        const hit = byCell.get(`${scheme}|${kernel}|${columnKey(col)}`);
        if (hit === undefined) {
          return "—";
        }
        const mark = hit.nCensored > 0 ? `${hit.tMixUpper}*` : `${hit.tMixUpper}`;
        return mark;
      });
      lines.push(
        `| ${idx === 0 ? scheme : ""} | ${kernel} | ${cells.join(" | ")} |`,
      );
    });
  }
  if (summaries.some((s) => s.nCensored > 0)) {
    lines.push("");
    lines.push("\\* some replicates were censored; the bound is optimistic.");
  }
  lines.push("");
  return lines.join("\n");
}
