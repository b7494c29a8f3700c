// Loss-vs-iteration chart as an inline SVG polyline. Pure string output so
// tests can assert on geometry; the chart re-renders incrementally as
// progress events append points.

export interface LossPoint {
  iteration: number;
  loss: number;
}

export interface PlotGeometry {
  path: string;
  points: { x: number; y: number }[];
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function lossGeometry(
  series: LossPoint[],
  width: number,
  height: number,
  padding = 6,
): PlotGeometry | null {
  if (series.length === 0) return null;
  const xs = series.map((p) => p.iteration);
  const ys = series.map((p) => p.loss);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const innerW = width - 2 * padding;
  const innerH = height - 2 * padding;
  const points = series.map((p) => ({
    x: padding + ((p.iteration - xMin) / xSpan) * innerW,
    y: padding + (1 - (p.loss - yMin) / ySpan) * innerH,
  }));
  const path = points
    .map((pt, i) => `${i === 0 ? "M" : "L"}${pt.x.toFixed(2)},${pt.y.toFixed(2)}`)
    .join(" ");
  return { path, points, xMin, xMax, yMin, yMax };
}

export function renderLossPlot(series: LossPoint[], width = 420, height = 160): string {
  const geometry = lossGeometry(series, width, height);
  if (geometry === null) {
    return `<div class="plot-empty">no training points yet</div>`;
  }
  const latest = series[series.length - 1];
  const marker =
    series.length === 1
      ? `<circle cx="${geometry.points[0].x.toFixed(2)}" cy="${geometry.points[0].y.toFixed(2)}" r="3" class="plot-dot"/>`
      : `<path d="${geometry.path}" class="plot-line" fill="none"/>`;
  return (
    `<svg class="loss-plot" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    marker +
    `</svg>` +
    `<div class="plot-caption">iter ${latest.iteration} · loss ${latest.loss.toPrecision(4)}` +
    ` · range [${geometry.yMin.toPrecision(3)}, ${geometry.yMax.toPrecision(3)}]</div>`
  );
}
