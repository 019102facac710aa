export { fillFor, grayLevel, makeScale, type ColorScale } from "./color.js";
export { renderTrainingCurves, type CurveRender } from "./curves.js";
export {
  formatValue,
  loadFilterExport,
  pairKey,
  parseGrid,
  serializeGrid,
  type FilterExport,
  type FilterGrid,
} from "./filters.js";
export { renderFilterSheet, renderSingleGrid } from "./heatmap.js";
export { parseTrainingLog, type EpochRecord } from "./logs.js";
export { main } from "./cli.js";
