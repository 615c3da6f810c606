/** Typed client for the ctrltree service (/api/v1).
 *
 * The UI is a thin client: every number it renders originates from one of
 * these responses, so this module is the only place that talks to the
 * network.
 */

export interface VariableDoc {
  name: string;
  kind: "numeric" | "categorical";
  dictionary?: string[];
}

export interface ControllerInfo {
  controller_id: string;
  states: number;
  permissive: boolean;
  variables: VariableDoc[];
  actions: string[];
}

export interface ExperimentStats {
  total_nodes: number;
  inner_nodes: number;
  leaves: number;
  depth: number;
  exact: boolean;
  config_fingerprint: string;
}

export interface ExperimentStatus {
  experiment_id: string;
  status: "queued" | "running" | "done" | "failed";
  stats?: ExperimentStats;
  error?: string;
  controller_id?: string;
}

export interface PredDoc {
  type: "axis" | "linear" | "grouping" | "algebraic";
  display: string;
  groups?: string[][];
}

export interface InnerDoc {
  pred: PredDoc;
  children: TreeNodeDoc[];
}

export interface LeafDoc {
  actions: number[];
  inexact?: boolean;
}

export type TreeNodeDoc = InnerDoc | LeafDoc;

export interface TreeDoc {
  version: number;
  variables: VariableDoc[];
  actions: string[];
  root: TreeNodeDoc;
}

export interface VarReport {
  name: string;
  minimum: number;
  maximum: number;
  step: number;
}

export interface CandidateReport {
  display: string;
  impurity: number | "inf" | null;
  domain: string;
}

export interface NodeReport {
  node_id: number;
  size: number;
  numeric: VarReport[];
  categorical: Record<string, Record<string, number>>;
  label_histogram: [string[], number][];
  action_histogram: Record<string, number>;
  candidates: CandidateReport[];
  template_candidates: CandidateReport[];
  open_nodes: number[];
}

export interface EvalReport {
  display: string;
  impurity: number | "inf";
  branch_sizes: number[];
  branch_common: string[][];
}

export interface PathStep {
  node: number;
  predicate: string;
  branch: number;
}

export interface PathDoc {
  steps: PathStep[];
  leaf: number;
  actions: string[];
}

export interface StepResponse {
  path: PathDoc;
  state: number[];
  allowed: string[];
}

export interface TraceEntry {
  state: unknown[];
  action: string;
  path: PathDoc;
}

export interface TraceDoc {
  current_state: unknown[];
  allowed: string[];
  trace: TraceEntry[];
}

export class ApiError extends Error {
  constructor(readonly kind: string, readonly detail: string,
              readonly status: number) {
    super(`${kind}: ${detail}`);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let kind = "HttpError";
  let detail = `${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      kind = body.error.kind;
      detail = body.error.detail;
    }
  } catch {
    /* non-JSON error body; keep the status line */
  }
  throw new ApiError(kind, detail, response.status);
}

export class Api {
  constructor(readonly base: string = "/api/v1") {}

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap<T>(response);
  }

  private async getJson<T>(path: string): Promise<T> {
    return unwrap<T>(await fetch(this.base + path));
  }

  async uploadController(form: FormData): Promise<{ controller_id: string }> {
    const response = await fetch(this.base + "/controllers",
                                 { method: "POST", body: form });
    return unwrap(response);
  }

  controllerInfo(id: string): Promise<ControllerInfo> {
    return this.getJson(`/controllers/${id}`);
  }

  submitExperiment(controllerId: string, config: unknown):
      Promise<{ experiment_id: string }> {
    return this.postJson("/experiments",
                         { controller_id: controllerId, config });
  }

  experimentStatus(id: string): Promise<ExperimentStatus> {
    return this.getJson(`/experiments/${id}`);
  }

  experimentTree(id: string): Promise<TreeDoc> {
    return this.getJson(`/experiments/${id}/tree`);
  }

  async exportText(id: string, format: "dot" | "c"): Promise<string> {
    const response = await fetch(`${this.base}/experiments/${id}/export?format=${format}`);
    if (!response.ok) {
      return unwrap(response);
    }
    return response.text();
  }

  retrain(treeId: string, nodeId: number, config: unknown):
      Promise<{ experiment_id: string }> {
    return this.postJson(`/trees/${treeId}/retrain`,
                         { node_id: nodeId, config });
  }

  openSession(controllerId: string, config: unknown):
      Promise<{ session_id: string }> {
    return this.postJson("/sessions", { controller_id: controllerId, config });
  }

  sessionNode(id: string): Promise<NodeReport> {
    return this.getJson(`/sessions/${id}/node`);
  }

  sessionEvaluate(id: string, expr: string): Promise<EvalReport> {
    return this.postJson(`/sessions/${id}/evaluate`, { expr });
  }

  sessionSplit(id: string, expr: string):
      Promise<{ split_node: number; cursor: number | null; open_nodes: number[] }> {
    return this.postJson(`/sessions/${id}/split`, { expr });
  }

  sessionAutocomplete(id: string): Promise<{ open_nodes: number[] }> {
    return this.postJson(`/sessions/${id}/autocomplete`, {});
  }

  sessionGoto(id: string, nodeId: number):
      Promise<{ cursor: number; open_nodes: number[] }> {
    return this.postJson(`/sessions/${id}/goto`, { node_id: nodeId });
  }

  sessionTree(id: string): Promise<TreeDoc> {
    return this.getJson(`/sessions/${id}/tree`);
  }

  openSimulation(treeRef: string, initialState: unknown[]):
      Promise<{ sim_id: string; path: PathDoc; allowed: string[] }> {
    return this.postJson("/simulations",
                         { tree_ref: treeRef, initial_state: initialState });
  }

  simulationTrace(id: string): Promise<TraceDoc> {
    return this.getJson(`/simulations/${id}`);
  }

  simulationStep(id: string, action: string, nextState?: unknown[]):
      Promise<StepResponse> {
    const body: Record<string, unknown> = { action };
    if (nextState !== undefined) {
      body.next_state = nextState;
    }
    return this.postJson(`/simulations/${id}/step`, body);
  }
}

export function formatImpurity(value: number | "inf" | null | undefined): string {
  if (value === "inf" || value === null || value === undefined) {
    return "∞";
  }
  return value === 0 ? "0" : value.toFixed(4);
}
