export { ApiClient, ApiError } from "./api.js";
export type {
  ApiEvent,
  ParetoPayload,
  ProgressDoc,
  ReportDoc,
  SessionDoc,
  StrategyDoc,
} from "./api.js";
export {
  FIRE_PALETTE,
  GridParseError,
  RAMP_PALETTE,
  parseAsciiGrid,
  renderGrid,
} from "./ascii-grid.js";
export type { AsciiGrid, Palette } from "./ascii-grid.js";
export { ConsoleState } from "./console.js";
export { EventCursor, EventCursorError, findCommits } from "./events.js";
export { ParetoPanel } from "./pareto.js";
export type { ScatterPoint } from "./pareto.js";
export { ReviewQueueView, queueRows, renderQueue } from "./reports.js";
export type { QueueRow } from "./reports.js";
