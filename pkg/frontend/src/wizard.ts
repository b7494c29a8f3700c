// Wizard state for the four views. Back/forward navigation never drops
// entered values; "Finish" only unlocks when every required field of the
// view is populated.

export type ViewName = "data" | "net" | "train" | "experiment";

export const VIEWS: ViewName[] = ["data", "net", "train", "experiment"];

export const STEP_TITLES: Record<ViewName, string[]> = {
  data: ["Choose source", "Import", "Split"],
  net: ["Edit net", "Check shapes", "Save"],
  train: ["Pick net", "Solver", "Pick data", "Run"],
  experiment: ["Pick model", "Pick data", "Extract or test", "Results"],
};

const REQUIRED: Record<ViewName, string[]> = {
  data: ["data.path"],
  net: ["net.source"],
  train: ["train.net_id", "train.dataset_id", "train.base_lr", "train.max_epochs"],
  experiment: ["experiment.model_id", "experiment.dataset_id"],
};

export class WizardState {
  view: ViewName = "data";
  private steps: Record<ViewName, number> = { data: 0, net: 0, train: 0, experiment: 0 };
  private values = new Map<string, string>();
  onChange: (() => void) | null = null;

  setView(view: ViewName) {
    this.view = view;
    this.onChange?.();
  }

  get step(): number {
    return this.steps[this.view];
  }

  stepCount(view: ViewName = this.view): number {
    return STEP_TITLES[view].length;
  }

  next() {
    const last = this.stepCount() - 1;
    this.steps[this.view] = Math.min(last, this.steps[this.view] + 1);
    this.onChange?.();
  }

  back() {
    this.steps[this.view] = Math.max(0, this.steps[this.view] - 1);
    this.onChange?.();
  }

  set(field: string, value: string) {
    this.values.set(field, value);
    this.onChange?.();
  }

  get(field: string): string {
    return this.values.get(field) ?? "";
  }

  /** Finish unlocks only once every required field of the view is set. */
  canFinish(view: ViewName = this.view): boolean {
    return REQUIRED[view].every((field) => this.get(field).trim() !== "");
  }

  missingFields(view: ViewName = this.view): string[] {
    return REQUIRED[view].filter((field) => this.get(field).trim() === "");
  }
}
