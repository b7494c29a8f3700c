// Browser bootstrap: hash routing between the four views, the long-poll
// notification loop, and DOM event wiring. All business logic lives on the
// gateway; this file only moves JSON into renderers.

import { Gateway, GatewayError } from "./api.js";
import { EditorModel, offsetToCursor, renderSuggestionPopup } from "./editor.js";
import { NotificationFeed, renderNotificationPanel } from "./feed.js";
import { renderLossPlot } from "./plot.js";
import { gridToPixels, renderConfusionHeatmap, renderFeatureGridMeta } from "./results.js";
import { renderView, ViewData } from "./views.js";
import { ViewName, VIEWS, WizardState } from "./wizard.js";

const gateway = new Gateway();
// view-scoped calls abort when the user navigates away; the long-poll loop
// and explicit user actions keep the unscoped client
let viewAbort = new AbortController();
const viewGateway = new Gateway((url, init) =>
  fetch(url, { ...init, signal: viewAbort.signal }));
const state = new WizardState();
const feed = new NotificationFeed();
const data: ViewData = {
  datasets: [],
  models: [],
  validation: null,
  lastSplit: null,
  trainTaskId: null,
  experimentTaskId: null,
  featureIds: {},
};

const editor = new EditorModel(async (source, line, column) => {
  const resp = await viewGateway.complete(source, line, column);
  return resp.suggestions;
});

function el<T extends HTMLElement>(id: string): T | null {
  return document.getElementById(id) as T | null;
}

function toast(message: string) {
  const node = el<HTMLDivElement>("toast");
  if (!node) return;
  node.textContent = message;
  node.classList.add("visible");
  setTimeout(() => node.classList.remove("visible"), 4000);
}

async function guard<T>(work: Promise<T>): Promise<T | null> {
  try {
    return await work;
  } catch (error) {
    if (error instanceof DOMException && error.name === "AbortError") {
      return null; // navigation cancelled a view-scoped request
    }
    toast(error instanceof GatewayError ? `${error.api.code}: ${error.api.message}` : String(error));
    return null;
  }
}

// ---------------------------------------------------------------------- routing

function currentView(): ViewName {
  const name = window.location.hash.replace("#/", "");
  return (VIEWS as string[]).includes(name) ? (name as ViewName) : "data";
}

function renderNav() {
  const nav = el<HTMLElement>("nav");
  if (!nav) return;
  nav.innerHTML = VIEWS.map(
    (view) =>
      `<a href="#/${view}" class="nav-${view} ${view === state.view ? "active" : ""}">` +
      `${view[0].toUpperCase()}${view.slice(1)}</a>`,
  ).join("");
}

function renderMain() {
  renderNav();
  const main = el<HTMLElement>("view");
  if (!main) return;
  main.className = `view-${state.view}`;
  main.innerHTML = renderView(state, data);
  if (state.view === "net") {
    const textarea = el<HTMLTextAreaElement>("net-editor");
    if (textarea) {
      textarea.value = state.get("net.source");
      editor.text = textarea.value;
    }
  }
  if (state.view === "train") renderPlot();
}

function renderPanel() {
  const panel = el<HTMLElement>("notifications");
  if (panel) panel.innerHTML = renderNotificationPanel(feed);
  if (state.view === "train") renderPlot();
}

function renderPlot() {
  const holder = el<HTMLElement>("loss-plot");
  if (!holder) return;
  const row = data.trainTaskId ? feed.row(data.trainTaskId) : undefined;
  holder.innerHTML = renderLossPlot(row?.lossSeries ?? []);
}

function renderPopup() {
  const anchor = el<HTMLElement>("popup-anchor");
  if (anchor) anchor.innerHTML = renderSuggestionPopup(editor);
}
editor.onPopupChange = renderPopup;

// ------------------------------------------------------------------ data loads

async function refreshDatasets() {
  const resp = await guard(viewGateway.listDatasets());
  if (resp) {
    data.datasets = resp.datasets;
    renderMain();
  }
}

async function refreshModels() {
  const resp = await guard(viewGateway.models());
  if (resp) {
    data.models = resp.models;
    if (state.view === "experiment") renderMain();
  }
}

// -------------------------------------------------------------- long-poll loop

async function pollLoop() {
  for (;;) {
    try {
      const resp = await gateway.notifications(feed.cursor, 25);
      if (feed.cursor < resp.floor) feed.cursor = resp.floor; // evicted window
      const fresh = feed.ingest(resp.events);
      if (fresh.length > 0) {
        renderPanel();
        if (fresh.some((e) => e.event === "finished" || e.event === "stopped")) {
          void refreshDatasets();
          void refreshModels();
          for (const event of fresh) {
            if (event.task_id === data.experimentTaskId && event.event === "finished") {
              void showExperimentResult();
            }
          }
        }
      }
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 1000)); // reconnect, same cursor
    }
  }
}

async function showExperimentResult() {
  if (!data.experimentTaskId) return;
  const resp = await guard(viewGateway.task(data.experimentTaskId));
  if (!resp || resp.task.state !== "succeeded" || !resp.task.result) return;
  const result = resp.task.result as Record<string, unknown>;
  if (result["metrics"]) {
    const holder = el<HTMLElement>("metrics");
    const datasetId = state.get("experiment.dataset_id");
    const classes = data.datasets.find((d) => d.id === datasetId)?.classes ?? [];
    if (holder) {
      holder.innerHTML = renderConfusionHeatmap(
        result["metrics"] as never, classes);
    }
  }
  if (result["feature_ids"]) {
    data.featureIds = { ...data.featureIds, ...(result["feature_ids"] as Record<string, string>) };
    renderMain();
  }
}

async function showFeatureGrid(featureId: string) {
  const sample = parseInt(state.get("experiment.sample") || "0", 10);
  const grid = await guard(viewGateway.featureGrid(featureId, sample));
  if (!grid) return;
  const holder = el<HTMLElement>("feature-grid");
  if (!holder) return;
  holder.innerHTML =
    renderFeatureGridMeta(grid) +
    `<canvas id="grid-canvas" width="${grid.width}" height="${grid.height}"></canvas>`;
  const canvas = el<HTMLCanvasElement>("grid-canvas");
  const ctx = canvas?.getContext("2d");
  if (!canvas || !ctx) return;
  const pixels = gridToPixels(grid);
  const image = ctx.createImageData(pixels.width, pixels.height);
  for (let i = 0; i < pixels.bytes.length; i++) {
    image.data[4 * i] = pixels.bytes[i];
    image.data[4 * i + 1] = pixels.bytes[i];
    image.data[4 * i + 2] = pixels.bytes[i];
    image.data[4 * i + 3] = 255;
  }
  ctx.putImageData(image, 0, 0);
  canvas.style.width = `${pixels.width * 4}px`; // nearest-neighbor zoom
}

// ------------------------------------------------------------------ actions

function solverSourceFromForm(): string {
  const lines = [
    `base_lr: ${state.get("train.base_lr") || "0.05"}`,
    `momentum: ${state.get("train.momentum") || "0.9"}`,
    `weight_decay: ${state.get("train.weight_decay") || "0.0005"}`,
    `lr_policy: "fixed"`,
    `max_epochs: ${state.get("train.max_epochs") || "20"}`,
    `batch_size: ${state.get("train.batch_size") || "16"}`,
    `seed: ${state.get("train.seed") || "42"}`,
  ];
  return lines.join("\n") + "\n";
}

function parseShape(text: string): number[] {
  const parts = text.split(",").map((p) => parseInt(p.trim(), 10));
  return parts.length === 4 && parts.every((n) => Number.isFinite(n) && n > 0)
    ? parts
    : [1, 1, 28, 28];
}

async function onFinish() {
  if (!state.canFinish()) return;
  if (state.view === "data") {
    await onImport();
  } else if (state.view === "net") {
    await onSaveNet();
  } else if (state.view === "train") {
    const resp = await guard(
      gateway.train(state.get("train.net_id"), state.get("train.dataset_id"), solverSourceFromForm()));
    if (resp) {
      data.trainTaskId = resp.task.id;
      toast(`training task ${resp.task.id} submitted`);
    }
  } else {
    await onExtract();
  }
}

async function onImport() {
  const resp = await guard(gateway.importDataset(state.get("data.path")));
  if (resp) toast(`import task ${resp.task.id} submitted`);
}

async function onSplit() {
  const resp = await guard(
    gateway.splitDataset(
      state.get("data.split_id"),
      parseFloat(state.get("data.fraction") || "0.8"),
      parseInt(state.get("data.seed") || "7", 10),
      state.get("data.stratified") === "on"));
  if (resp) {
    data.lastSplit = resp;
    await refreshDatasets();
  }
}

async function onValidate() {
  const textarea = el<HTMLTextAreaElement>("net-editor");
  if (!textarea) return;
  state.set("net.source", textarea.value);
  const resp = await guard(gateway.validate(textarea.value, parseShape(state.get("net.input_shape"))));
  if (resp) {
    data.validation = resp;
    editor.diagnostics = resp.diagnostics;
    renderMain();
  }
}

async function onSaveNet() {
  const textarea = el<HTMLTextAreaElement>("net-editor");
  if (textarea) state.set("net.source", textarea.value);
  const resp = await guard(gateway.saveNet(state.get("net.source")));
  if (resp) {
    state.set("net.id", resp.id);
    state.set("train.net_id", resp.id);
    toast(`net saved as ${resp.id}`);
    renderMain();
  }
}

async function onDeploy() {
  const resp = await guard(gateway.deployNet(state.get("net.id")));
  if (resp) {
    state.set("net.source", resp.source);
    toast(`deploy net saved as ${resp.id}`);
    renderMain();
  }
}

async function onExtract() {
  const layers = (state.get("experiment.layers") || "ip1").split(",").map((s) => s.trim()).filter(Boolean);
  const resp = await guard(
    gateway.extract(state.get("experiment.model_id"), state.get("experiment.dataset_id"), layers));
  if (resp) {
    data.experimentTaskId = resp.task.id;
    toast(`extract task ${resp.task.id} submitted`);
  }
}

async function onTest() {
  const resp = await guard(
    gateway.testModel(state.get("experiment.model_id"), state.get("experiment.dataset_id")));
  if (resp) {
    data.experimentTaskId = resp.task.id;
    toast(`test task ${resp.task.id} submitted`);
  }
}

// ------------------------------------------------------------------ wiring

function wireEvents() {
  document.body.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.id === "next") state.next();
    else if (target.id === "back") state.back();
    else if (target.id === "finish") void onFinish();
    else if (target.id === "import") void onImport();
    else if (target.id === "split") void onSplit();
    else if (target.id === "validate") void onValidate();
    else if (target.id === "save-net") void onSaveNet();
    else if (target.id === "deploy-net") void onDeploy();
    else if (target.id === "run-extract") void onExtract();
    else if (target.id === "run-test") void onTest();
    else if (target.classList.contains("stop")) {
      void guard(gateway.cancel(target.dataset["task"] ?? ""));
    } else if (target.classList.contains("show-grid")) {
      void showFeatureGrid(target.dataset["feature"] ?? "");
    } else if (target.closest(".suggestion-popup")) {
      const item = target.closest("li");
      const index = item ? Array.from(item.parentElement!.children).indexOf(item) : -1;
      if (index >= 0) applySuggestion(index);
    }
  });

  document.body.addEventListener("input", (ev) => {
    const target = ev.target as HTMLInputElement;
    const fieldName = target.dataset["field"];
    if (!fieldName) return;
    const value = target.type === "checkbox" ? (target.checked ? "on" : "") : target.value;
    state.onChange = null; // avoid re-render under the user's cursor
    state.set(fieldName, value);
    state.onChange = renderMain;
    if (fieldName === "data.path" || fieldName === "data.split_id") renderMain();
  });

  document.body.addEventListener("keyup", (ev) => {
    const target = ev.target as HTMLTextAreaElement;
    if (target.id !== "net-editor") return;
    const cursor = offsetToCursor(target.value, target.selectionStart ?? 0);
    state.onChange = null;
    state.set("net.source", target.value);
    state.onChange = renderMain;
    editor.setText(target.value, cursor.line, cursor.column);
  });

  document.body.addEventListener("keydown", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.id !== "net-editor" || !editor.popupVisible) {
      if (target.id === "net-editor" && ev.key === " " && ev.ctrlKey) {
        ev.preventDefault();
        void editor.requestNow();
      }
      return;
    }
    if (ev.key === "ArrowDown") { ev.preventDefault(); editor.moveSelection(1); }
    else if (ev.key === "ArrowUp") { ev.preventDefault(); editor.moveSelection(-1); }
    else if (ev.key === "Escape") editor.dismiss();
    else if (ev.key === "Tab" || ev.key === "Enter") { ev.preventDefault(); applySuggestion(); }
  });

  window.addEventListener("hashchange", () => {
    viewAbort.abort();
    viewAbort = new AbortController();
    state.setView(currentView());
    void refreshDatasets();
    void refreshModels();
  });
}

function applySuggestion(index?: number) {
  const textarea = el<HTMLTextAreaElement>("net-editor");
  if (!textarea) return;
  const text = editor.accept(index);
  textarea.value = text;
  state.onChange = null;
  state.set("net.source", text);
  state.onChange = renderMain;
  textarea.focus();
}

export function start() {
  state.onChange = renderMain;
  state.setView(currentView());
  wireEvents();
  renderPanel();
  void refreshDatasets();
  void refreshModels();
  void pollLoop();
}

if (typeof document !== "undefined" && document.getElementById("view")) {
  start();
}
