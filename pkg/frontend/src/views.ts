// Per-view HTML. Everything displayed comes from wizard state plus the
// latest gateway payloads handed in by main.ts.

import { DatasetMeta, ModelMeta, ValidateResponse } from "./api.js";
import { escapeAttr, escapeHtml } from "./html.js";
import { renderNetGraph } from "./netgraph.js";
import { STEP_TITLES, ViewName, WizardState } from "./wizard.js";

export interface ViewData {
  datasets: DatasetMeta[];
  models: (ModelMeta & Record<string, unknown>)[];
  validation: ValidateResponse | null;
  lastSplit: { train_id: string; test_id: string } | null;
  trainTaskId: string | null;
  experimentTaskId: string | null;
  featureIds: Record<string, string>;
}

export function renderStepHeader(state: WizardState): string {
  const titles = STEP_TITLES[state.view];
  const crumbs = titles
    .map((title, i) => {
      const cls = i === state.step ? "step current" : i < state.step ? "step done" : "step";
      return `<span class="${cls}">${i + 1}. ${escapeHtml(title)}</span>`;
    })
    .join("<span class='sep'>→</span>");
  const finish = state.canFinish()
    ? `<button id="finish" class="finish">Finish</button>`
    : `<button id="finish" class="finish" disabled title="missing: ${escapeAttr(
        state.missingFields().join(", "))}">Finish</button>`;
  return (
    `<div class="step-header">${crumbs}` +
    `<span class="spacer"></span>` +
    `<button id="back" ${state.step === 0 ? "disabled" : ""}>Back</button>` +
    `<button id="next" ${state.step === state.stepCount() - 1 ? "disabled" : ""}>Next</button>` +
    finish +
    `</div>`
  );
}

function datasetOptions(datasets: DatasetMeta[], selected: string): string {
  const options = datasets
    .map((d) => {
      const label = `${d.id} (${d.num_samples} samples, ${d.classes.length} classes)`;
      return `<option value="${escapeAttr(d.id)}" ${d.id === selected ? "selected" : ""}>${escapeHtml(label)}</option>`;
    })
    .join("");
  return `<option value="">— choose a dataset —</option>` + options;
}

function field(state: WizardState, name: string, label: string, placeholder = "", kind = "text"): string {
  return (
    `<label class="field">${escapeHtml(label)}` +
    `<input type="${kind}" data-field="${escapeAttr(name)}" value="${escapeAttr(state.get(name))}"` +
    ` placeholder="${escapeAttr(placeholder)}"></label>`
  );
}

export function renderDataView(state: WizardState, data: ViewData): string {
  const listing = data.datasets.length
    ? `<ul class="dataset-list">` +
      data.datasets
        .map((d) =>
          `<li><code>${escapeHtml(d.id)}</code> ${d.num_samples} samples · ` +
          `${d.classes.map(escapeHtml).join(", ")} · shape ${d.shape.join("×")}</li>`)
        .join("") +
      `</ul>`
    : `<div class="panel-empty">no datasets imported yet</div>`;
  const split = data.lastSplit
    ? `<div class="split-result">train <code>${escapeHtml(data.lastSplit.train_id)}</code>` +
      ` / test <code>${escapeHtml(data.lastSplit.test_id)}</code></div>`
    : "";
  return (
    field(state, "data.path", "Source path (class folders or CSV)", "/data/mnist-folders") +
    `<button id="import" ${state.get("data.path") ? "" : "disabled"}>Import</button>` +
    `<h3>Imported datasets</h3>${listing}` +
    `<h3>Split</h3>` +
    `<label class="field">Dataset <select data-field="data.split_id">${datasetOptions(
      data.datasets, state.get("data.split_id"))}</select></label>` +
    field(state, "data.fraction", "Train fraction", "0.8") +
    field(state, "data.seed", "Seed", "7") +
    `<label class="field checkbox">stratified <input type="checkbox" data-field="data.stratified"` +
    ` ${state.get("data.stratified") === "on" ? "checked" : ""}></label>` +
    `<button id="split" ${state.get("data.split_id") ? "" : "disabled"}>Split</button>` +
    split
  );
}

export function renderNetView(state: WizardState, data: ViewData): string {
  const graph = data.validation
    ? renderNetGraph(data.validation)
    : `<div class="panel-empty">validate to see shapes</div>`;
  return (
    `<div class="net-columns">` +
    `<div class="net-editor-pane">` +
    field(state, "net.input_shape", "Input shape n,c,h,w", "1,1,28,28") +
    `<textarea id="net-editor" spellcheck="false" rows="18">${escapeHtml(state.get("net.source"))}</textarea>` +
    `<div id="popup-anchor"></div>` +
    `<div class="editor-buttons">` +
    `<button id="validate">Validate</button>` +
    `<button id="save-net">Save net</button>` +
    `<button id="deploy-net" ${state.get("net.id") ? "" : "disabled"}>Derive deploy</button>` +
    `</div>` +
    (state.get("net.id") ? `<div>saved as <code>${escapeHtml(state.get("net.id"))}</code></div>` : "") +
    `</div>` +
    `<div class="net-graph-pane"><h3>Layers</h3>${graph}</div>` +
    `</div>`
  );
}

export function renderTrainView(state: WizardState, data: ViewData): string {
  return (
    field(state, "train.net_id", "Net id (save one in the Net view)", "") +
    `<label class="field">Dataset <select data-field="train.dataset_id">${datasetOptions(
      data.datasets, state.get("train.dataset_id"))}</select></label>` +
    `<h3>Solver</h3>` +
    field(state, "train.base_lr", "base_lr", "0.05") +
    field(state, "train.momentum", "momentum", "0.9") +
    field(state, "train.weight_decay", "weight_decay", "0.0005") +
    field(state, "train.max_epochs", "max_epochs", "20") +
    field(state, "train.batch_size", "batch_size", "16") +
    field(state, "train.seed", "seed", "42") +
    `<div class="hint">Finish kicks off the training task; watch it in the notification panel.</div>` +
    `<h3>Training error</h3>` +
    `<div id="loss-plot"></div>`
  );
}

export function renderExperimentView(state: WizardState, data: ViewData): string {
  const models = data.models.length
    ? data.models
        .map((m) =>
          `<option value="${escapeAttr(m.id)}" ${m.id === state.get("experiment.model_id") ? "selected" : ""}>` +
          `${escapeHtml(m.id)} (${escapeHtml(String(m.status))})</option>`)
        .join("")
    : "";
  const features = Object.entries(data.featureIds)
    .map(([layer, id]) =>
      `<li>${escapeHtml(layer)} → <code>${escapeHtml(id)}</code>` +
      ` <button class="show-grid" data-feature="${escapeAttr(id)}">view grid</button></li>`)
    .join("");
  return (
    `<label class="field">Model <select data-field="experiment.model_id">` +
    `<option value="">— choose a model —</option>${models}</select></label>` +
    `<label class="field">Dataset <select data-field="experiment.dataset_id">${datasetOptions(
      data.datasets, state.get("experiment.dataset_id"))}</select></label>` +
    field(state, "experiment.layers", "Layers to extract (comma separated)", "ip1") +
    `<div class="editor-buttons">` +
    `<button id="run-extract" ${state.canFinish() ? "" : "disabled"}>Extract features</button>` +
    `<button id="run-test" ${state.canFinish() ? "" : "disabled"}>Test model</button>` +
    `</div>` +
    `<h3>Feature sets</h3><ul class="feature-list">${features || "<li class='panel-empty'>none yet</li>"}</ul>` +
    `<label class="field">Grid sample index ` +
    `<input type="number" min="0" value="${escapeAttr(state.get("experiment.sample") || "0")}"` +
    ` data-field="experiment.sample"></label>` +
    `<div id="feature-grid"></div>` +
    `<h3>Metrics</h3><div id="metrics"></div>`
  );
}

export function renderView(state: WizardState, data: ViewData): string {
  const body: Record<ViewName, (s: WizardState, d: ViewData) => string> = {
    data: renderDataView,
    net: renderNetView,
    train: renderTrainView,
    experiment: renderExperimentView,
  };
  return renderStepHeader(state) + `<div class="view-body">${body[state.view](state, data)}</div>`;
}
