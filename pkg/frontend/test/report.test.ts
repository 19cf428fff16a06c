import { mkdtempSync, readFileSync, readdirSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { CsvFormatError, loadCurveFile, parseCurveCsv } from "../src/curves.js";
import { groupPanels, renderFigure } from "../src/figure.js";
import { loadSummaryFile, parseSummary } from "../src/summaries.js";
import { renderMarkdownTable } from "../src/table.js";
import { parseArgs, run } from "../src/cli.js";

const RESCUE = join(__dirname, "..", "fixtures", "rescue");
const TABLE = join(__dirname, "..", "fixtures", "table");

function rescueCurves() {
  return readdirSync(RESCUE)
    .filter((f) => f.startsWith("curve_"))
    .sort()
    .map((f) => loadCurveFile(join(RESCUE, f)));
}

function tableSummaries() {
  return readdirSync(TABLE)
    .filter((f) => f.startsWith("summary_"))
    .sort()
    .map((f) => loadSummaryFile(join(TABLE, f)));
}

describe("curve parsing", () => {
  it("reads the fixture curves with labels", () => {
    const curves = rescueCurves();
    expect(curves.length).toBe(8);
    expect(curves[0].segments).toEqual(["rescue", "all_ones", "da", "n40"]);
    const pts = curves[0].points;
    expect(pts[0].t).toBe(1);
    // dbar never increases along t
    for (let i = 1; i < pts.length; i++) {
      expect(pts[i].dbar).toBeLessThanOrEqual(pts[i - 1].dbar);
    }
  });

  it("rejects a malformed header naming file and line", () => {
    expect(() => parseCurveCsv("time,bound\n1,0.5", "bad.csv")).toThrowError(
      /bad\.csv:1: expected header/,
    );
  });

  it("rejects non-numeric and non-increasing rows with line numbers", () => {
    expect(() =>
      parseCurveCsv("t,dbar,se\n1,0.5,0.1\n2,oops,0.1", "curve_x__da__n1.csv"),
    ).toThrowError(/curve_x__da__n1\.csv:3: non-numeric/);
    expect(() =>
      parseCurveCsv("t,dbar,se\n2,0.5,0.1\n2,0.4,0.1", "curve_x__da__n1.csv"),
    ).toThrowError(/strictly increasing/);
    expect(() => parseCurveCsv("t,dbar,se\n", "curve_x__da__n1.csv")).toThrowError(
      CsvFormatError,
    );
  });
});

describe("figure rendering", () => {
  it("lays the rescue fixtures out as a 2x2 grid", () => {
    const panels = groupPanels(rescueCurves());
    expect(panels.map((p) => p.title)).toEqual([
      "rescue/all_ones / da",
      "rescue/all_ones / da_mod",
      "rescue/well_specified / da",
      "rescue/well_specified / da_mod",
    ]);
    expect(panels.every((p) => p.lines.length === 2)).toBe(true);
    // natural ordering of the sample-size lines
    expect(panels[0].lines.map((l) => l.key)).toEqual(["n40", "n80"]);
    const svg = renderFigure(rescueCurves());
    expect((svg.match(/<rect x=/g) ?? []).length).toBe(4); // four panel frames
    expect((svg.match(/stroke-dasharray/g) ?? []).length).toBe(4); // eps lines
    expect(svg).toContain("</svg>");
  });

  it("is byte-stable across renders", () => {
    const a = renderFigure(rescueCurves());
    const b = renderFigure(rescueCurves());
    expect(a).toBe(b);
    expect(a).not.toMatch(/\d{4}-\d{2}-\d{2}/); // no dates baked in
  });

  it("rejects an empty curve list", () => {
    expect(() => renderFigure([])).toThrowError(/no curve files/);
  });
});

describe("summary parsing and table rendering", () => {
  it("parses identity from the file name", () => {
    const s = loadSummaryFile(join(TABLE, "summary_gprior_g1__da__p10_r0.2.json"));
    expect(s.scheme).toBe("gprior_g1");
    expect(s.kernel).toBe("da");
    expect(s.p).toBe(10);
    expect(s.ratio).toBe(0.2);
    expect(s.epsilon).toBe(0.1);
    expect(s.tMixUpper).toBeGreaterThan(0);
  });

  it("renders row groups by scheme and columns by (ratio, p)", () => {
    const md = renderMarkdownTable(tableSummaries());
    const lines = md.split("\n");
    expect(lines[2]).toBe("| Prior | Method | n/p=0.2, p=10 | n/p=1.25, p=8 |");
    expect(md).toContain("| gprior_g1 | da |");
    expect(md).toContain("| intercept_c1 | da |");
    // two schemes x two kernels = four data rows
    const dataRows = lines.filter((l) => l.includes("| da |") || l.includes("| cg |"));
    expect(dataRows.length).toBe(4);
  });

  it("renders a single cell and marks missing combinations", () => {
    const one = [tableSummaries()[0]];
    const md = renderMarkdownTable(one);
    expect(md.split("\n").filter((l) => l.startsWith("|")).length).toBe(3);
    const partial = tableSummaries().slice(0, 3);
    expect(renderMarkdownTable(partial)).toContain("—");
  });

  it("rejects mixed target levels", () => {
    const summaries = tableSummaries();
    const clone = { ...summaries[0], epsilon: 0.25 };
    expect(() => renderMarkdownTable([clone, ...summaries.slice(1)])).toThrowError(
      /mix target levels/,
    );
  });

  it("rejects a schema violation", () => {
    expect(() =>
      parseSummary('{"epsilon": 0.1}', "summary_x__da__p1_r1.json"),
    ).toThrowError(/missing numeric field/);
  });
});

describe("command line", () => {
  it("requires inputs", () => {
    expect(() => parseArgs([])).toThrowError(/usage/);
    expect(() => parseArgs(["--nope"])).toThrowError(/unknown flag/);
  });

  it("regenerates figure and table from the shipped fixtures, byte-stable", () => {
    const out1 = mkdtempSync(join(tmpdir(), "report-"));
    const out2 = mkdtempSync(join(tmpdir(), "report-"));
    for (const out of [out1, out2]) {
      const written = run([
        "--curves",
        RESCUE,
        "--summaries",
        TABLE,
        "--out",
        out,
      ]);
      expect(written.length).toBe(2);
    }
    const svg1 = readFileSync(join(out1, "figure.svg"), "utf8");
    const svg2 = readFileSync(join(out2, "figure.svg"), "utf8");
    expect(svg1).toBe(svg2);
    const md1 = readFileSync(join(out1, "table.md"), "utf8");
    const md2 = readFileSync(join(out2, "table.md"), "utf8");
    expect(md1).toBe(md2);
    expect(svg1.startsWith("<svg")).toBe(true);
    expect(md1).toContain("| Prior | Method |");
  });

  it("propagates malformed-input errors", () => {
    const dir = mkdtempSync(join(tmpdir(), "badcsv-"));
    writeFileSync(join(dir, "curve_bad__da__n1.csv"), "wrong,header\n1,2\n");
    expect(() => run(["--curves", dir, "--out", dir])).toThrowError(CsvFormatError);
  });
});
