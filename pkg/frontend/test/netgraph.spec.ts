import { describe, expect, it } from "vitest";

import { ValidateResponse } from "../src/api.js";
import { renderNetGraph } from "../src/netgraph.js";

import validFixture from "./fixtures/validate_net.json";
import errorFixture from "./fixtures/validate_net_error.json";

const valid = validFixture as ValidateResponse;
const invalid = errorFixture as ValidateResponse;

describe("net graph from recorded validate responses", () => {
  it("renders every layer in order with its color class and shape", () => {
    const html = renderNetGraph(valid);
    const names = valid.layers!.map((l) => l.name);
    let lastIndex = -1;
    for (const name of names) {
      const index = html.indexOf(`data-layer="${name}"`);
      expect(index, name).toBeGreaterThan(lastIndex);
      lastIndex = index;
    }
    for (const layer of valid.layers!) {
      expect(html).toContain(`color-${layer.color}`);
      if (layer.output_shape) {
        expect(html).toContain(layer.output_shape.join("×"));
      }
    }
  });

  it("conv and pool rows carry distinct color classes", () => {
    const conv = valid.layers!.find((l) => l.kind === "Convolution")!;
    const pool = valid.layers!.find((l) => l.kind === "Pooling")!;
    expect(conv.color).not.toBe(pool.color);
    const html = renderNetGraph(valid);
    expect(html).toContain(`color-${conv.color}`);
    expect(html).toContain(`color-${pool.color}`);
  });

  it("shows parameter counts for learnable layers", () => {
    const html = renderNetGraph(valid);
    const ip = valid.layers!.find((l) => l.kind === "InnerProduct")!;
    expect(ip.param_count).toBeGreaterThan(0);
    expect(html).toContain(`${ip.param_count} params`);
  });

  it("an invalid net renders diagnostics instead of a graph", () => {
    expect(invalid.ok).toBe(false);
    const html = renderNetGraph(invalid);
    expect(html).not.toContain("net-graph");
    expect(html).toContain("diagnostics");
    expect(html).toContain(`data-line="${invalid.diagnostics[0].span.line}"`);
    expect(html).toContain("unsupported layer type");
  });

  it("an empty net renders the empty-state placeholder", () => {
    const empty: ValidateResponse = {
      ok: true, diagnostics: [], report: { blob_shapes: {}, layer_colors: {}, param_counts: {} },
      layers: [], input_shape: [1, 1, 28, 28],
    };
    expect(renderNetGraph(empty)).toContain("net-empty");
  });
});
