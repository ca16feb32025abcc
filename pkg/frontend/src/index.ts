export { TRACE_COLUMNS, TraceError, loadTrace, column } from "./trace.js";
export type { Trace, TraceColumn } from "./trace.js";
export { renderChart } from "./svg.js";
export type { Panel, Series, Band, Vec } from "./svg.js";
export { FIGURE_KINDS, FigureError, buildFigure } from "./figures.js";
export type { Figure, FigureKind } from "./figures.js";
export { render } from "./render.js";
export type { PlotRequest, RenderResult } from "./render.js";
