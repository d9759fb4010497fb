import Papa from "papaparse";

/** One benchmark table row, all fields kept as raw CSV strings. */
export type RawRow = Record<string, string>;

export const REQUIRED_COLUMNS = [
  "estimator",
  "snr_db",
  "m_frames",
  "n_rf",
  "n_p",
  "p_subcarriers",
  "g_r",
  "g_t",
  "g_c",
  "trial",
  "seed",
  "nmse",
  "nmse_db",
  "rate_bps_hz",
  "flags",
] as const;

export type ColumnName = (typeof REQUIRED_COLUMNS)[number];

/** Parse "-inf"/"inf"/"nan" spellings the results writer may emit. */
export function toNumber(raw: string): number {
  const trimmed = raw.trim();
  if (trimmed === "inf") return Infinity;
  if (trimmed === "-inf") return -Infinity;
  if (trimmed === "nan") return NaN;
  return Number(trimmed);
}

/** Parse the results table, validating the header against the bench schema. */
export function parseResultsCsv(text: string): RawRow[] {
  if (text.trim() === "") {
    throw new Error("CSV is empty");
  }
  const parsed = Papa.parse<RawRow>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`CSV parse error at row ${first.row ?? "?"}: ${first.message}`);
  }
  const header = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS.filter((col) => !header.includes(col));
  if (missing.length > 0) {
    throw new Error(`CSV is missing required columns: ${missing.join(", ")}`);
  }
  if (parsed.data.length === 0) {
    throw new Error("CSV contains a header but no data rows");
  }
  return parsed.data;
}

/** Aggregate (per sweep point, per estimator) rows carry trial = -1. */
export function aggregateRows(rows: RawRow[]): RawRow[] {
  const aggregates = rows.filter((row) => row["trial"] === "-1");
  if (aggregates.length === 0) {
    throw new Error("CSV has no aggregate rows (trial = -1); run the benchmark first");
  }
  return aggregates;
}
