/**
 * Render log-log convergence figures and a fitted-slope table from a sweep
 * CSV. The figures never recompute errors; they visualize the CSV as-is.
 *
 * Usage: node dist/plot.js <input.csv> <output-dir>
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { logLogChart, Series } from "./chart.js";
import { parseSweepCsv, SweepRow } from "./csv.js";
import { fitLogLog, referenceLine } from "./fit.js";

export interface TableEntry {
  family: string;
  slope: number;
  rSquared: number;
  points: number;
}

export interface PlotRequest {
  /** restrict to these families (default: every family with data) */
  families?: string[];
  /** reference slopes to overlay (default: [theta, 2*theta] from the CSV) */
  referenceSlopes?: number[];
}

export interface RenderResult {
  written: string[];
  table: TableEntry[];
  tableText: string;
}

interface Family {
  name: string;
  /** column holding the exactly computed error */
  exact: keyof SweepRow;
  mc?: keyof SweepRow;
  stderr?: keyof SweepRow;
  /** weak errors oscillate in sign; plot magnitudes */
  absolute: boolean;
}

const FAMILIES: Family[] = [
  { name: "strong", exact: "strong_exact", mc: "strong_mc",
    stderr: "strong_stderr", absolute: false },
  { name: "weak", exact: "weak_exact", mc: "weak_mc",
    stderr: "weak_stderr", absolute: true },
  { name: "deterministic", exact: "det_error", absolute: false },
];

function positiveSeries(rows: SweepRow[], col: keyof SweepRow, absolute: boolean) {
  const out: { h: number; value: number; row: SweepRow }[] = [];
  for (const row of rows) {
    const raw = row[col];
    if (raw === null) continue;
    const value = absolute ? Math.abs(raw as number) : (raw as number);
    if (value > 0) out.push({ h: row.h, value, row });
  }
  return out;
}

export function renderSweep(
  csvText: string,
  outDir: string,
  request: PlotRequest = {},
): RenderResult {
  const rows = parseSweepCsv(csvText);
  const theta = rows[0].theta;
  if (rows.some((r) => r.theta !== theta)) {
    throw new Error("rows carry inconsistent theta values");
  }
  const slopes = request.referenceSlopes ?? [theta, 2 * theta];

  const written: string[] = [];
  const table: TableEntry[] = [];

  for (const family of FAMILIES) {
    if (request.families && !request.families.includes(family.name)) continue;
    const exact = positiveSeries(rows, family.exact, family.absolute);
    if (exact.length === 0) continue; // column empty in this mode

    const series: Series[] = [
      {
        label: `${family.exact} (closed form)`,
        color: "#1f4e9c",
        markers: true,
        points: exact.map(({ h, value }) => ({ h, value })),
      },
    ];
    if (family.mc) {
      const mc = positiveSeries(rows, family.mc, family.absolute);
      if (mc.length > 0) {
        series.push({
          label: `${String(family.mc)} (sampled ±1 s.e.)`,
          color: "#b03a2e",
          markers: true,
          points: mc.map(({ h, value, row }) => ({
            h,
            value,
            err: family.stderr ? (row[family.stderr] as number | null) ?? undefined
                               : undefined,
          })),
        });
      }
    }
    // dashed references anchored at the coarsest exact point
    const hs = exact.map((p) => p.h);
    slopes.forEach((slope, k) => {
      const ref = referenceLine(hs, exact[0].value, slope);
      series.push({
        label: `reference slope ${slope.toFixed(1)}`,
        color: k === 0 ? "#7f8c8d" : "#424949",
        dashed: true,
        points: hs.map((h, i) => ({ h, value: ref[i] })),
      });
    });

    const svg = logLogChart({
      title: `${family.name} error vs mesh width (theta=${theta})`,
      xLabel: "mesh width h",
      yLabel: `${family.name} error`,
      series,
    });
    const file = join(outDir, `${family.name}.svg`);
    writeFileSync(file, svg, "utf-8");
    written.push(file);

    if (exact.length >= 3) {
      const fit = fitLogLog(hs, exact.map((p) => p.value));
      table.push({
        family: String(family.exact),
        slope: fit.slope,
        rSquared: fit.rSquared,
        points: fit.points,
      });
    }
  }

  if (written.length === 0) {
    throw new Error("no error family has plottable data");
  }

  const lines = ["family         slope       R^2        points"];
  for (const entry of table) {
    lines.push(
      `${entry.family.padEnd(14)} ${entry.slope.toFixed(6).padStart(9)}  ` +
      `${entry.rSquared.toFixed(6).padStart(9)}  ${entry.points}`,
    );
  }
  const tableText = lines.join("\n") + "\n";
  const tablePath = join(outDir, "slopes.txt");
  writeFileSync(tablePath, tableText, "utf-8");
  written.push(tablePath);

  return { written, table, tableText };
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plot <input.csv> <output-dir>");
    return 2;
  }
  const [input, outDir] = argv;
  try {
    const text = readFileSync(input, "utf-8");
    mkdirSync(outDir, { recursive: true });
    const result = renderSweep(text, outDir);
    process.stdout.write(result.tableText);
    for (const f of result.written) console.error(`wrote ${f}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const isEntry = process.argv[1]?.endsWith("plot.js");
if (isEntry) {
  process.exit(main(process.argv.slice(2)));
}
