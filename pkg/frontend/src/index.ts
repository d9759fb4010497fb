export { aggregateRows, parseResultsCsv, toNumber, REQUIRED_COLUMNS } from "./csv.js";
export type { RawRow, ColumnName } from "./csv.js";
export { FIGURES, figureSpec, seriesOrder } from "./figures.js";
export type { FigureSpec } from "./figures.js";
export { linearScale, tickValues } from "./scale.js";
export { buildSeries, renderSvg, plotCsv } from "./plot.js";
export type { Series, SeriesPoint } from "./plot.js";
export { main } from "./cli.js";
