import { describe, expect, it } from "vitest";

import { renderStepHeader, renderView, ViewData } from "../src/views.js";
import { WizardState } from "../src/wizard.js";

import validateFixture from "./fixtures/validate_net.json";

const emptyData: ViewData = {
  datasets: [],
  models: [],
  validation: null,
  lastSplit: null,
  trainTaskId: null,
  experimentTaskId: null,
  featureIds: {},
};

describe("wizard state", () => {
  it("back/forward navigation preserves entered values", () => {
    const state = new WizardState();
    state.set("data.path", "/tmp/things");
    state.next();
    state.next();
    state.back();
    state.back();
    expect(state.get("data.path")).toBe("/tmp/things");
    expect(state.step).toBe(0);
    state.setView("train");
    state.set("train.base_lr", "0.05");
    state.setView("data");
    state.setView("train");
    expect(state.get("train.base_lr")).toBe("0.05");
  });

  it("clamps steps at both ends", () => {
    const state = new WizardState();
    state.back();
    expect(state.step).toBe(0);
    for (let i = 0; i < 10; i++) state.next();
    expect(state.step).toBe(state.stepCount() - 1);
  });

  it("finish unlocks only when required fields are populated", () => {
    const state = new WizardState();
    state.setView("train");
    expect(state.canFinish()).toBe(false);
    expect(state.missingFields()).toContain("train.net_id");
    state.set("train.net_id", "abc");
    state.set("train.dataset_id", "def");
    state.set("train.base_lr", "0.05");
    expect(state.canFinish()).toBe(false);
    state.set("train.max_epochs", "20");
    expect(state.canFinish()).toBe(true);

    const header = renderStepHeader(state);
    expect(header).not.toContain("disabled title");
  });

  it("renders a disabled finish with the missing fields listed", () => {
    const state = new WizardState();
    state.setView("experiment");
    const header = renderStepHeader(state);
    expect(header).toContain("disabled");
    expect(header).toContain("experiment.model_id");
  });
});

describe("view rendering", () => {
  it("every view renders from empty data without crashing", () => {
    const state = new WizardState();
    for (const view of ["data", "net", "train", "experiment"] as const) {
      state.setView(view);
      const html = renderView(state, emptyData);
      expect(html).toContain("step-header");
    }
  });

  it("net view embeds the color-coded graph from a validate response", () => {
    const state = new WizardState();
    state.setView("net");
    const html = renderView(state, { ...emptyData, validation: validateFixture as never });
    expect(html).toContain("net-graph");
    expect(html).toContain("color-1"); // Convolution row
    expect(html).toContain("conv1");
  });
});
