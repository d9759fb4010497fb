import type { ColumnName } from "./csv.js";

/** How one figure id maps table columns onto axes and series. */
export interface FigureSpec {
  id: string;
  title: string;
  xKey: ColumnName;
  xLabel: string;
  yKey: ColumnName;
  yLabel: string;
  seriesKey: ColumnName;
  /** Legend label for one value of the series column. */
  seriesLabel: (value: string) => string;
}

const ESTIMATOR_LABELS: Record<string, string> = {
  td: "time-domain",
  fd: "per-subcarrier",
  tf: "combined",
};

const estimatorLabel = (value: string): string => ESTIMATOR_LABELS[value] ?? value;

export const FIGURES: Record<string, FigureSpec> = {
  "training-length": {
    id: "training-length",
    title: "Estimation error vs SNR for different training lengths",
    xKey: "snr_db",
    xLabel: "SNR (dB)",
    yKey: "nmse_db",
    yLabel: "NMSE (dB)",
    seriesKey: "m_frames",
    seriesLabel: (value) => `M = ${value} frames`,
  },
  "rf-chains": {
    id: "rf-chains",
    title: "Estimation error vs SNR for different receive-chain counts",
    xKey: "snr_db",
    xLabel: "SNR (dB)",
    yKey: "nmse_db",
    yLabel: "NMSE (dB)",
    seriesKey: "n_rf",
    seriesLabel: (value) => `${value} RF chain${value === "1" ? "" : "s"}`,
  },
  "estimator-comparison": {
    id: "estimator-comparison",
    title: "Estimation error vs SNR for the three estimators",
    xKey: "snr_db",
    xLabel: "SNR (dB)",
    yKey: "nmse_db",
    yLabel: "NMSE (dB)",
    seriesKey: "estimator",
    seriesLabel: estimatorLabel,
  },
  "p-sweep": {
    id: "p-sweep",
    title: "Combined estimator error vs number of pilot subcarriers",
    xKey: "p_subcarriers",
    xLabel: "pilot subcarriers",
    yKey: "nmse_db",
    yLabel: "NMSE (dB)",
    seriesKey: "estimator",
    seriesLabel: estimatorLabel,
  },
};

export function figureSpec(id: string): FigureSpec {
  const spec = FIGURES[id];
  if (!spec) {
    throw new Error(`unknown figure '${id}' (available: ${Object.keys(FIGURES).join(", ")})`);
  }
  return spec;
}

/** Deterministic legend order: numeric series ascending, estimators td/fd/tf. */
export function seriesOrder(values: string[]): string[] {
  const estimatorRank: Record<string, number> = { td: 0, fd: 1, tf: 2 };
  return [...values].sort((a, b) => {
    const na = Number(a);
    const nb = Number(b);
    if (Number.isFinite(na) && Number.isFinite(nb)) return na - nb;
    const ra = estimatorRank[a];
    const rb = estimatorRank[b];
    if (ra !== undefined && rb !== undefined) return ra - rb;
    return a < b ? -1 : a > b ? 1 : 0;
  });
}
