// Color-coded layer list for a validated net. The color class comes from the
// gateway's shape report (one class per layer kind); CSS maps classes to the
// actual palette.

import { ValidateResponse } from "./api.js";
import { renderDiagnostics } from "./editor.js";
import { escapeHtml } from "./html.js";

export function renderNetGraph(result: ValidateResponse): string {
  if (!result.ok || result.layers === null) {
    return (
      `<div class="net-invalid">net does not validate</div>` +
      renderDiagnostics(result.diagnostics)
    );
  }
  if (result.layers.length === 0) {
    return `<div class="net-empty">empty net — add a layer to see its shape</div>`;
  }
  const rows = result.layers.map((layer) => {
    const shape = layer.output_shape ? layer.output_shape.join("×") : "?";
    const params = layer.param_count > 0 ? `${layer.param_count} params` : "";
    return (
      `<li class="layer-row color-${layer.color}" data-layer="${escapeHtml(layer.name)}">` +
      `<span class="layer-name">${escapeHtml(layer.name)}</span>` +
      `<span class="layer-kind">${escapeHtml(layer.kind)}</span>` +
      `<span class="layer-shape">${escapeHtml(shape)}</span>` +
      `<span class="layer-params">${escapeHtml(params)}</span>` +
      `</li>`
    );
  });
  const warnings = renderDiagnostics(result.diagnostics.filter((d) => d.severity === "warning"));
  return `<ul class="net-graph">${rows.join("")}</ul>${warnings}`;
}
