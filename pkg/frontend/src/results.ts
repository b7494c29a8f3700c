// Experiment result viewers: confusion-matrix heatmap and feature-grid
// tiles. Both render from gateway payloads only.

import { FeatureGridResponse, MetricsJson } from "./api.js";
import { escapeHtml } from "./html.js";

export interface HeatmapCell {
  truth: number;
  predicted: number;
  count: number;
  intensity: number; // 0..1 within the matrix's own max
  diagonal: boolean;
}

export function heatmapCells(metrics: MetricsJson): HeatmapCell[] {
  const max = Math.max(1, ...metrics.confusion.flat());
  const cells: HeatmapCell[] = [];
  metrics.confusion.forEach((row, t) =>
    row.forEach((count, p) =>
      cells.push({
        truth: t,
        predicted: p,
        count,
        intensity: count / max,
        diagonal: t === p,
      })));
  return cells;
}

export function renderConfusionHeatmap(metrics: MetricsJson, classNames: string[]): string {
  const k = metrics.confusion.length;
  const names = (i: number) => escapeHtml(classNames[i] ?? String(i));
  const header =
    `<tr><th></th>` +
    Array.from({ length: k }, (_, p) => `<th scope="col">${names(p)}</th>`).join("") +
    `</tr>`;
  const body = metrics.confusion
    .map((row, t) => {
      const max = Math.max(1, ...metrics.confusion.flat());
      const cells = row
        .map((count, p) => {
          const alpha = (count / max).toFixed(3);
          return (
            `<td class="cm-cell${t === p ? " cm-diag" : ""}"` +
            ` data-truth="${t}" data-pred="${p}"` +
            ` style="--heat:${alpha}">${count}</td>`
          );
        })
        .join("");
      return `<tr><th scope="row">${names(t)}</th>${cells}</tr>`;
    })
    .join("");
  const perClass = metrics.per_class_accuracy
    .map((acc, i) => {
      const undefinedFlag = metrics.undefined_classes.includes(i) ? " (no samples)" : "";
      return `<li>${names(i)}: ${(acc * 100).toFixed(1)}%${undefinedFlag}</li>`;
    })
    .join("");
  return (
    `<div class="metrics">` +
    `<div class="global-accuracy">accuracy ${(metrics.global_accuracy * 100).toFixed(1)}%</div>` +
    `<table class="confusion">${header}${body}</table>` +
    `<ul class="per-class">${perClass}</ul>` +
    `</div>`
  );
}

export interface GridPixels {
  width: number;
  height: number;
  /** 0..255 grayscale, row-major, ready for a canvas ImageData fill. */
  bytes: Uint8ClampedArray;
}

export function gridToPixels(grid: FeatureGridResponse): GridPixels {
  const bytes = new Uint8ClampedArray(grid.values.length);
  for (let i = 0; i < grid.values.length; i++) {
    bytes[i] = Math.round(Math.min(1, Math.max(0, grid.values[i])) * 255);
  }
  return { width: grid.width, height: grid.height, bytes };
}

export function renderFeatureGridMeta(grid: FeatureGridResponse): string {
  return (
    `<div class="grid-meta">layer ${escapeHtml(grid.layer)} · sample ${grid.sample}` +
    ` · ${grid.channels} channels · label ${grid.label}</div>`
  );
}
