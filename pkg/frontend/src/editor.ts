// Cursor-aware net editor model. Completion requests are debounced 150 ms
// and stamped with a request id so the popup always shows exactly the
// gateway's response for the current cursor, never a stale one.

import { Diagnostic } from "./api.js";
import { escapeHtml } from "./html.js";

export type Completer = (source: string, line: number, column: number) => Promise<string[]>;

export interface Scheduler {
  set(fn: () => void, ms: number): number;
  clear(id: number): void;
}

const realScheduler: Scheduler = {
  set: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  clear: (id) => clearTimeout(id),
};

export class EditorModel {
  text = "";
  line = 1;
  column = 1;
  diagnostics: Diagnostic[] = [];
  suggestions: string[] = [];
  popupVisible = false;
  selected = 0;

  private pendingTimer: number | null = null;
  private requestId = 0;
  onPopupChange: (() => void) | null = null;

  constructor(
    private completer: Completer,
    private debounceMs = 150,
    private scheduler: Scheduler = realScheduler,
  ) {}

  setText(text: string, line: number, column: number) {
    this.text = text;
    this.moveCursor(line, column);
  }

  moveCursor(line: number, column: number) {
    this.line = Math.max(1, line);
    this.column = Math.max(1, column);
    this.scheduleCompletion();
  }

  /** Debounced fetch; only the newest in-flight response lands. */
  private scheduleCompletion() {
    if (this.pendingTimer !== null) this.scheduler.clear(this.pendingTimer);
    this.pendingTimer = this.scheduler.set(() => {
      this.pendingTimer = null;
      void this.requestNow();
    }, this.debounceMs);
  }

  /** Immediate fetch (on-demand trigger, e.g. ctrl-space). */
  async requestNow(): Promise<void> {
    const id = ++this.requestId;
    let suggestions: string[];
    try {
      suggestions = await this.completer(this.text, this.line, this.column);
    } catch {
      suggestions = [];
    }
    if (id !== this.requestId) return; // a newer cursor position superseded this
    this.suggestions = suggestions;
    this.selected = 0;
    this.popupVisible = suggestions.length > 0;
    this.onPopupChange?.();
  }

  dismiss() {
    this.popupVisible = false;
    this.onPopupChange?.();
  }

  moveSelection(delta: number) {
    if (!this.popupVisible || this.suggestions.length === 0) return;
    const n = this.suggestions.length;
    this.selected = (this.selected + delta + n) % n;
    this.onPopupChange?.();
  }

  /** Insert the chosen suggestion at the cursor; returns the new text. */
  accept(index = this.selected): string {
    const suggestion = this.suggestions[index];
    if (suggestion === undefined) return this.text;
    const lines = this.text.split("\n");
    const lineIndex = Math.min(this.line - 1, lines.length - 1);
    const lineText = lines[lineIndex] ?? "";
    const cut = Math.min(this.column - 1, lineText.length);
    lines[lineIndex] = lineText.slice(0, cut) + suggestion + lineText.slice(cut);
    this.text = lines.join("\n");
    this.column = cut + suggestion.length + 1;
    this.popupVisible = false;
    this.onPopupChange?.();
    return this.text;
  }
}

/** Translate a character offset in `text` to a 1-based (line, column). */
export function offsetToCursor(text: string, offset: number): { line: number; column: number } {
  const clamped = Math.max(0, Math.min(offset, text.length));
  const before = text.slice(0, clamped);
  const line = before.split("\n").length;
  const lastBreak = before.lastIndexOf("\n");
  return { line, column: clamped - lastBreak };
}

export function renderSuggestionPopup(model: EditorModel): string {
  if (!model.popupVisible || model.suggestions.length === 0) return "";
  const items = model.suggestions
    .map((s, i) =>
      `<li class="${i === model.selected ? "selected" : ""}" data-suggestion="${escapeHtml(s)}">` +
      `${escapeHtml(s)}</li>`)
    .join("");
  return `<ul class="suggestion-popup">${items}</ul>`;
}

export function renderDiagnostics(diagnostics: Diagnostic[]): string {
  if (diagnostics.length === 0) return "";
  const rows = diagnostics
    .map((d) =>
      `<li class="diag-${d.severity}" data-line="${d.span.line}" data-col="${d.span.col}">` +
      `${d.span.line}:${d.span.col} ${escapeHtml(d.severity)}: ${escapeHtml(d.message)}</li>`)
    .join("");
  return `<ul class="diagnostics">${rows}</ul>`;
}
