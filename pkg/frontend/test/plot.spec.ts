import { describe, expect, it } from "vitest";

import { FeedEvent } from "../src/api.js";
import { NotificationFeed } from "../src/feed.js";
import { lossGeometry, renderLossPlot } from "../src/plot.js";

import trainFixture from "./fixtures/train_notifications.json";

describe("loss plot geometry", () => {
  it("a monotone decreasing series maps to a monotone polyline", () => {
    const series = Array.from({ length: 20 }, (_, i) => ({ iteration: i + 1, loss: 2 - i * 0.05 }));
    const geometry = lossGeometry(series, 400, 160)!;
    for (let i = 1; i < geometry.points.length; i++) {
      expect(geometry.points[i].x).toBeGreaterThan(geometry.points[i - 1].x);
      // svg y grows downward, so decreasing loss means increasing y
      expect(geometry.points[i].y).toBeGreaterThan(geometry.points[i - 1].y);
    }
    expect(geometry.path.startsWith("M")).toBe(true);
    expect(geometry.path.split("L").length).toBe(series.length);
  });

  it("a single point renders a marker, not a line", () => {
    const html = renderLossPlot([{ iteration: 1, loss: 0.5 }]);
    expect(html).toContain("<circle");
    expect(html).not.toContain("<path");
  });

  it("no points renders the empty state", () => {
    expect(renderLossPlot([])).toContain("plot-empty");
  });

  it("1000 events keep every point", () => {
    const series = Array.from({ length: 1000 }, (_, i) => ({
      iteration: i, loss: Math.exp(-i / 200) + 0.01 * Math.sin(i),
    }));
    const geometry = lossGeometry(series, 420, 160)!;
    expect(geometry.points.length).toBe(1000);
    const html = renderLossPlot(series);
    expect(html.split("L").length).toBe(1000);
  });

  it("axes autoscale to the data range", () => {
    const geometry = lossGeometry(
      [{ iteration: 5, loss: 10 }, { iteration: 10, loss: 30 }], 100, 100, 0)!;
    expect(geometry.xMin).toBe(5);
    expect(geometry.xMax).toBe(10);
    expect(geometry.yMin).toBe(10);
    expect(geometry.yMax).toBe(30);
    expect(geometry.points[0]).toEqual({ x: 0, y: 100 });
    expect(geometry.points[1]).toEqual({ x: 100, y: 0 });
  });

  it("plots the recorded training run's loss series", () => {
    const feed = new NotificationFeed();
    feed.ingest(trainFixture.events as FeedEvent[]);
    const row = feed.panelRows()[0];
    const html = renderLossPlot(row.lossSeries);
    expect(html).toContain("loss-plot");
    expect(html).toContain(`iter ${row.lossSeries[row.lossSeries.length - 1].iteration}`);
  });
});
