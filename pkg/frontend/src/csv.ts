/**
 * Parser for the sweep CSV emitted by the experiment CLI.
 *
 * The file starts with a `# schema=1` marker, followed by the fixed header
 *   h,N,J,theta,T,strong_exact,strong_mc,strong_stderr,
 *   weak_exact,weak_mc,weak_stderr,det_error,seconds
 * Empty fields mark quantities the producing mode did not compute.
 */

export const SCHEMA_LINE = "# schema=1";

export const COLUMNS = [
  "h", "N", "J", "theta", "T",
  "strong_exact", "strong_mc", "strong_stderr",
  "weak_exact", "weak_mc", "weak_stderr",
  "det_error", "seconds",
] as const;

export type ColumnName = (typeof COLUMNS)[number];

export interface SweepRow {
  h: number;
  N: number;
  J: number;
  theta: number;
  T: number;
  strong_exact: number | null;
  strong_mc: number | null;
  strong_stderr: number | null;
  weak_exact: number | null;
  weak_mc: number | null;
  weak_stderr: number | null;
  det_error: number | null;
  seconds: number | null;
}

const REQUIRED_NUMERIC: ColumnName[] = ["h", "N", "J", "theta", "T"];

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0 || lines[0].trim() !== SCHEMA_LINE) {
    throw new Error(
      `unsupported input: expected first line "${SCHEMA_LINE}", got "${lines[0] ?? ""}"`,
    );
  }
  if (lines.length < 2) {
    throw new Error("CSV has no header line");
  }
  const header = lines[1].split(",").map((s) => s.trim());
  for (const col of COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`missing column "${col}" in CSV header`);
    }
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const rows: SweepRow[] = [];
  for (const line of lines.slice(2)) {
    const parts = line.split(",");
    const cell = (col: ColumnName): number | null => {
      const raw = parts[index.get(col)!]?.trim() ?? "";
      if (raw === "") return null;
      const value = Number(raw);
      if (!Number.isFinite(value)) {
        throw new Error(`cannot parse ${col}="${raw}" as a finite number`);
      }
      return value;
    };
    const row: Record<string, number | null> = {};
    for (const col of COLUMNS) row[col] = cell(col);
    for (const col of REQUIRED_NUMERIC) {
      if (row[col] === null) throw new Error(`column "${col}" has an empty cell`);
    }
    rows.push(row as unknown as SweepRow);
  }
  if (rows.length === 0) {
    throw new Error("CSV contains no data rows");
  }
  return rows;
}
