// Notification feed client: sequence-number dedup, per-task rollups, and the
// panel view model. Reconnects replay overlapping chunks; ingest() accepts
// each sequence number exactly once, so rendering is idempotent.

import { FeedEvent } from "./api.js";
import { escapeHtml } from "./html.js";

export interface TaskRow {
  taskId: string;
  kind: string;
  state: "running" | "succeeded" | "failed" | "stopped";
  progress: number;
  etaSeconds: number;
  lastSequence: number;
  events: FeedEvent[];
  lossSeries: { iteration: number; loss: number }[];
  error?: string;
}

export class NotificationFeed {
  cursor = 0;
  private rows = new Map<string, TaskRow>();

  /** Accept new events (sequence > cursor only); returns those accepted. */
  ingest(events: FeedEvent[]): FeedEvent[] {
    const accepted: FeedEvent[] = [];
    for (const event of events) {
      if (event.sequence <= this.cursor) continue; // duplicate from a reconnect
      this.cursor = event.sequence;
      accepted.push(event);
      this.apply(event);
    }
    return accepted;
  }

  private apply(event: FeedEvent) {
    let row = this.rows.get(event.task_id);
    if (!row) {
      row = {
        taskId: event.task_id,
        kind: String(event.payload["kind"] ?? ""),
        state: "running",
        progress: 0,
        etaSeconds: 0,
        lastSequence: 0,
        events: [],
        lossSeries: [],
      };
      this.rows.set(event.task_id, row);
    }
    row.lastSequence = event.sequence;
    row.events.push(event);
    switch (event.event) {
      case "started":
        row.state = "running";
        if (event.payload["kind"]) row.kind = String(event.payload["kind"]);
        break;
      case "progress": {
        const p = Number(event.payload["progress"] ?? row.progress);
        row.progress = Math.max(row.progress, p);
        row.etaSeconds = Number(event.payload["eta_seconds"] ?? row.etaSeconds);
        const loss = event.payload["loss"];
        const iteration = event.payload["iteration"];
        if (typeof loss === "number" && typeof iteration === "number") {
          row.lossSeries.push({ iteration, loss });
        }
        break;
      }
      case "finished":
        row.state = "succeeded";
        row.progress = 1;
        row.etaSeconds = 0;
        break;
      case "failed":
        row.state = "failed";
        row.error = String(event.payload["error"] ?? "failed");
        break;
      case "stopped":
        row.state = "stopped";
        row.etaSeconds = 0;
        break;
    }
  }

  /** Panel rows, newest activity first. */
  panelRows(): TaskRow[] {
    return [...this.rows.values()].sort((a, b) => b.lastSequence - a.lastSequence);
  }

  row(taskId: string): TaskRow | undefined {
    return this.rows.get(taskId);
  }

  /** Lifecycle events of one task, in arrival (= sequence) order. */
  eventOrder(taskId: string): string[] {
    return this.rows.get(taskId)?.events.map((e) => e.event) ?? [];
  }
}

export function formatEta(seconds: number): string {
  if (seconds <= 0) return "";
  if (seconds < 60) return `${Math.ceil(seconds)}s left`;
  return `${Math.floor(seconds / 60)}m${Math.ceil(seconds % 60)}s left`;
}

const STATE_BADGE: Record<TaskRow["state"], string> = {
  running: "●",
  succeeded: "✓",
  failed: "✗",
  stopped: "■",
};

export function renderNotificationPanel(feed: NotificationFeed): string {
  const rows = feed.panelRows();
  if (rows.length === 0) {
    return `<div class="panel-empty">No tasks yet — import a dataset or start a training run.</div>`;
  }
  const items = rows.map((row) => {
    const pct = Math.round(row.progress * 100);
    const stop =
      row.state === "running"
        ? `<button class="stop" data-task="${escapeHtml(row.taskId)}">stop</button>`
        : "";
    const error = row.error ? `<div class="task-error">${escapeHtml(row.error)}</div>` : "";
    return (
      `<li class="task-row state-${row.state}" data-task="${escapeHtml(row.taskId)}">` +
      `<span class="badge">${STATE_BADGE[row.state]}</span>` +
      `<span class="task-kind">${escapeHtml(row.kind || "task")}</span>` +
      `<span class="task-id">${escapeHtml(row.taskId)}</span>` +
      `<progress max="100" value="${pct}"></progress>` +
      `<span class="task-pct">${pct}%</span>` +
      `<span class="task-eta">${formatEta(row.etaSeconds)}</span>` +
      `<span class="task-state">${row.state}</span>` +
      stop +
      error +
      `</li>`
    );
  });
  return `<ul class="task-list">${items.join("")}</ul>`;
}
