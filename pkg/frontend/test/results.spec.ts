import { describe, expect, it } from "vitest";

import { FeatureGridResponse, MetricsJson } from "../src/api.js";
import { gridToPixels, heatmapCells, renderConfusionHeatmap } from "../src/results.js";

import handFixture from "./fixtures/metrics_hand_fixture.json";
import gridFixture from "./fixtures/feature_grid_8ch.json";

const metrics = handFixture.metrics as MetricsJson;
const classNames = handFixture.class_names as string[];
const grid = gridFixture as FeatureGridResponse;

describe("confusion heatmap on the recorded hand fixture", () => {
  it("displays the fixture counts [[1,1],[0,2]] and accuracy 0.75", () => {
    expect(metrics.confusion).toEqual([[1, 1], [0, 2]]);
    const html = renderConfusionHeatmap(metrics, classNames);
    expect(html).toContain("accuracy 75.0%");
    expect(html).toContain(`data-truth="0" data-pred="0"`);
    // every count appears in its cell
    expect(html).toMatch(/data-truth="0" data-pred="0"[^>]*>1</);
    expect(html).toMatch(/data-truth="0" data-pred="1"[^>]*>1</);
    expect(html).toMatch(/data-truth="1" data-pred="0"[^>]*>0</);
    expect(html).toMatch(/data-truth="1" data-pred="1"[^>]*>2</);
  });

  it("labels rows and columns with the class names", () => {
    const html = renderConfusionHeatmap(metrics, classNames);
    for (const name of classNames) {
      expect(html).toContain(`<th scope="col">${name}</th>`);
      expect(html).toContain(`<th scope="row">${name}</th>`);
    }
  });

  it("shows per-class accuracy", () => {
    const html = renderConfusionHeatmap(metrics, classNames);
    expect(html).toContain("northwest: 50.0%");
    expect(html).toContain("southeast: 100.0%");
  });

  it("scales cell intensity to the matrix maximum", () => {
    const cells = heatmapCells(metrics);
    const diagonal = cells.find((c) => c.truth === 1 && c.predicted === 1)!;
    expect(diagonal.intensity).toBe(1);
    const offDiagonal = cells.find((c) => c.truth === 0 && c.predicted === 1)!;
    expect(offDiagonal.intensity).toBe(0.5);
    expect(cells.find((c) => c.truth === 1 && c.predicted === 0)!.intensity).toBe(0);
  });

  it("renders a diagonal-only heatmap for a perfect report", () => {
    const perfect: MetricsJson = {
      global_accuracy: 1,
      per_class_accuracy: [1, 1],
      confusion: [[3, 0], [0, 5]],
      undefined_classes: [],
    };
    const html = renderConfusionHeatmap(perfect, ["a", "b"]);
    expect(html).toContain("accuracy 100.0%");
    const offCells = heatmapCells(perfect).filter((c) => !c.diagonal);
    expect(offCells.every((c) => c.count === 0)).toBe(true);
  });
});

describe("feature grid from the recorded 8-channel extraction", () => {
  it("is the 3x3 tiling of 8x8 tiles with 1px separators", () => {
    expect(grid.channels).toBe(8);
    expect(grid.height).toBe(3 * 8 + 2);
    expect(grid.width).toBe(3 * 8 + 2);
    expect(grid.values.length).toBe(grid.height * grid.width);
  });

  it("separator rows and columns are zero", () => {
    const at = (row: number, col: number) => grid.values[row * grid.width + col];
    for (let i = 0; i < grid.width; i++) {
      expect(at(8, i)).toBe(0);
      expect(at(17, i)).toBe(0);
      expect(at(i, 8)).toBe(0);
      expect(at(i, 17)).toBe(0);
    }
  });

  it("the unused 9th cell stays blank", () => {
    const at = (row: number, col: number) => grid.values[row * grid.width + col];
    for (let r = 18; r < 26; r++) {
      for (let c = 18; c < 26; c++) {
        expect(at(r, c)).toBe(0);
      }
    }
  });

  it("converts to canvas-ready grayscale bytes", () => {
    const pixels = gridToPixels(grid);
    expect(pixels.width).toBe(grid.width);
    expect(pixels.bytes.length).toBe(grid.values.length);
    const max = Math.max(...grid.values);
    expect(Math.max(...pixels.bytes)).toBe(Math.round(max * 255));
    expect(Math.min(...pixels.bytes)).toBe(0);
  });
});
