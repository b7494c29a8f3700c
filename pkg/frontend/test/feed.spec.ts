import { describe, expect, it } from "vitest";

import { FeedEvent } from "../src/api.js";
import { NotificationFeed, renderNotificationPanel } from "../src/feed.js";

import trainFixture from "./fixtures/train_notifications.json";

const events = trainFixture.events as FeedEvent[];
const firstChunk = trainFixture.first_chunk as FeedEvent[];
const reconnectChunk = trainFixture.reconnect_chunk as FeedEvent[];

describe("notification feed over a recorded training run", () => {
  it("renders started -> progress... -> finished in order", () => {
    const feed = new NotificationFeed();
    feed.ingest(events);
    const order = feed.eventOrder(events[0].task_id);
    expect(order[0]).toBe("started");
    expect(order[order.length - 1]).toBe("finished");
    expect(order.slice(1, -1).every((e) => e === "progress")).toBe(true);
    expect(order.filter((e) => e === "progress").length).toBeGreaterThan(0);
  });

  it("deduplicates an overlapping reconnect chunk", () => {
    const feed = new NotificationFeed();
    const acceptedFirst = feed.ingest(firstChunk);
    expect(acceptedFirst.length).toBe(firstChunk.length);

    // the reconnect chunk replays part of the first chunk
    const overlap = reconnectChunk.filter((e) =>
      firstChunk.some((f) => f.sequence === e.sequence));
    expect(overlap.length).toBeGreaterThan(0);

    const acceptedSecond = feed.ingest(reconnectChunk);
    const freshOnly = reconnectChunk.filter((e) =>
      !firstChunk.some((f) => f.sequence === e.sequence));
    expect(acceptedSecond.map((e) => e.sequence)).toEqual(freshOnly.map((e) => e.sequence));

    // the rollup saw every event exactly once
    const order = feed.eventOrder(events[0].task_id);
    expect(order.length).toBe(new Set([...firstChunk, ...reconnectChunk].map((e) => e.sequence)).size);
  });

  it("re-ingesting the same events is idempotent for rendering", () => {
    const feed = new NotificationFeed();
    feed.ingest(events);
    const once = renderNotificationPanel(feed);
    feed.ingest(events); // full replay
    expect(renderNotificationPanel(feed)).toBe(once);
  });

  it("tracks progress monotonically and finishes at 100%", () => {
    const feed = new NotificationFeed();
    let lastProgress = 0;
    for (const event of events) {
      feed.ingest([event]);
      const row = feed.row(event.task_id)!;
      expect(row.progress).toBeGreaterThanOrEqual(lastProgress);
      lastProgress = row.progress;
    }
    expect(feed.row(events[0].task_id)!.progress).toBe(1);
    expect(feed.row(events[0].task_id)!.state).toBe("succeeded");
  });

  it("collects the loss series for the training plot", () => {
    const feed = new NotificationFeed();
    feed.ingest(events);
    const series = feed.row(events[0].task_id)!.lossSeries;
    expect(series.length).toBeGreaterThan(2);
    expect(series.map((p) => p.iteration)).toEqual(
      [...series.map((p) => p.iteration)].sort((a, b) => a - b));
  });

  it("renders a stop control only while running", () => {
    const feed = new NotificationFeed();
    feed.ingest(events.slice(0, 2)); // started + one progress
    expect(renderNotificationPanel(feed)).toContain("class=\"stop\"");
    feed.ingest(events.slice(2));
    expect(renderNotificationPanel(feed)).not.toContain("class=\"stop\"");
  });

  it("shows the empty state with no tasks", () => {
    expect(renderNotificationPanel(new NotificationFeed())).toContain("No tasks yet");
  });

  it("renders stopped and failed badges", () => {
    const feed = new NotificationFeed();
    const base = { task_id: "t1", payload: {}, timestamp: 0 };
    feed.ingest([
      { ...base, sequence: 1, event: "started", payload: { kind: "train" } },
      { ...base, sequence: 2, event: "stopped" },
    ] as FeedEvent[]);
    expect(feed.row("t1")!.state).toBe("stopped");
    const failedFeed = new NotificationFeed();
    failedFeed.ingest([
      { ...base, sequence: 1, event: "started" },
      { ...base, sequence: 2, event: "failed", payload: { error: "boom" } },
    ] as FeedEvent[]);
    expect(failedFeed.row("t1")!.error).toBe("boom");
    expect(renderNotificationPanel(failedFeed)).toContain("boom");
  });
});
