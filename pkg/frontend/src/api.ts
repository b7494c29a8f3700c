// Typed client for the workbench gateway. Every number the UI shows comes
// from one of these payloads.

export interface DiagnosticSpan {
  line: number;
  col: number;
  end_line: number;
  end_col: number;
}

export interface Diagnostic {
  severity: "error" | "warning";
  message: string;
  span: DiagnosticSpan;
}

export interface LayerSummary {
  name: string;
  kind: string;
  color: number;
  tops: string[];
  bottoms: string[];
  output_shape: number[] | null;
  param_count: number;
}

export interface ShapeReportJson {
  blob_shapes: Record<string, number[]>;
  layer_colors: Record<string, number>;
  param_counts: Record<string, number>;
}

export interface ValidateResponse {
  ok: boolean;
  diagnostics: Diagnostic[];
  report: ShapeReportJson | null;
  layers: LayerSummary[] | null;
  input_shape: number[];
}

export interface TaskRecord {
  id: string;
  kind: string;
  state: "queued" | "running" | "succeeded" | "failed" | "stopped";
  description: Record<string, unknown>;
  progress: number;
  eta_seconds: number;
  created: number;
  started: number | null;
  finished: number | null;
  result: Record<string, unknown> | null;
  error: string | null;
}

export interface FeedEvent {
  sequence: number;
  task_id: string;
  event: "started" | "progress" | "finished" | "failed" | "stopped";
  payload: Record<string, unknown>;
  timestamp: number;
}

export interface NotificationsResponse {
  events: FeedEvent[];
  floor: number;
  latest: number;
}

export interface MetricsJson {
  global_accuracy: number;
  per_class_accuracy: number[];
  confusion: number[][];
  undefined_classes: number[];
}

export interface FeatureGridResponse {
  sample: number;
  layer: string;
  label: number;
  channels: number;
  tile_height: number;
  tile_width: number;
  height: number;
  width: number;
  values: number[];
}

export interface DatasetMeta {
  id: string;
  classes: string[];
  num_samples: number;
  shape: number[];
  provenance: string;
  checksum: string;
}

export interface ModelMeta {
  id: string;
  net_source: string;
  classes: string[];
  input_shape: number[];
  final_loss: number;
  epochs: number;
  status: string;
}

export interface ApiError {
  code: "bad_request" | "not_found" | "conflict" | "internal";
  message: string;
  details?: unknown;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {
  constructor(public api: ApiError, public status: number) {
    super(api.message);
  }
}

export class Gateway {
  constructor(private fetchFn: FetchLike = (u, i) => fetch(u, i), private base = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(this.base + path, init);
    const data = await resp.json();
    if (!resp.ok) throw new GatewayError(data as ApiError, resp.status);
    return data as T;
  }

  validate(source: string, inputShape: number[]): Promise<ValidateResponse> {
    return this.request("POST", "/nets/validate", { source, input_shape: inputShape });
  }

  complete(source: string, line: number, column: number): Promise<{ suggestions: string[] }> {
    return this.request("POST", "/nets/complete", { source, line, column });
  }

  saveNet(source: string): Promise<{ id: string }> {
    return this.request("POST", "/nets", { source });
  }

  deployNet(netId: string): Promise<{ id: string; source: string }> {
    return this.request("POST", `/nets/${netId}/deploy`);
  }

  importDataset(path: string, format?: string): Promise<{ task: TaskRecord }> {
    return this.request("POST", "/datasets/import", { path, format: format ?? null });
  }

  listDatasets(): Promise<{ datasets: DatasetMeta[] }> {
    return this.request("GET", "/datasets");
  }

  splitDataset(id: string, fraction: number, seed: number, stratified: boolean) {
    return this.request<{ train_id: string; test_id: string }>(
      "POST", `/datasets/${id}/split`,
      { train_fraction: fraction, seed, stratified });
  }

  train(netId: string, datasetId: string, solverSource: string): Promise<{ task: TaskRecord }> {
    return this.request("POST", "/train", {
      net_id: netId, dataset_id: datasetId, solver_source: solverSource,
    });
  }

  extract(modelId: string, datasetId: string, layers: string[]): Promise<{ task: TaskRecord }> {
    return this.request("POST", "/experiments/extract", {
      model_id: modelId, dataset_id: datasetId, layers,
    });
  }

  testModel(modelId: string, datasetId: string): Promise<{ task: TaskRecord }> {
    return this.request("POST", "/experiments/test", {
      model_id: modelId, dataset_id: datasetId,
    });
  }

  tasks(): Promise<{ tasks: TaskRecord[] }> {
    return this.request("GET", "/tasks");
  }

  task(id: string): Promise<{ task: TaskRecord }> {
    return this.request("GET", `/tasks/${id}`);
  }

  cancel(id: string): Promise<{ acknowledged: boolean }> {
    return this.request("POST", `/tasks/${id}/cancel`);
  }

  notifications(after: number, timeoutSeconds: number): Promise<NotificationsResponse> {
    return this.request("GET", `/notifications?after=${after}&timeout=${timeoutSeconds}`);
  }

  models(): Promise<{ models: (ModelMeta & Record<string, unknown>)[] }> {
    return this.request("GET", "/models");
  }

  model(id: string): Promise<ModelMeta> {
    return this.request("GET", `/models/${id}`);
  }

  featureGrid(featureId: string, sample: number): Promise<FeatureGridResponse> {
    return this.request("GET", `/features/${featureId}/grid?sample=${sample}`);
  }
}
