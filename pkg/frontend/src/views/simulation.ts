/** Simulation: current state, the decision path highlighted on the tree,
 * allowed actions as buttons (nothing else is clickable, so a disallowed
 * action cannot be sent), successor entry, and an exportable trace. */

import { Api, ApiError, PathDoc, TraceDoc } from "../api.js";
import { banner, clear, download, el } from "../dom.js";
import { pathNodeIds } from "../treeLayout.js";
import { TreeView } from "./tree.js";

export class SimulationView {
  readonly root: HTMLElement;
  allowed: string[] = [];
  path: PathDoc | null = null;
  private readonly stateLine = el("p", { class: "sim-state" });
  private readonly actionRow = el("div", { class: "actions" });
  private readonly nextState = el("input", {
    id: "next-state", type: "text",
    placeholder: "next state, comma separated (blank = unique successor)",
  });
  private readonly traceBody = el("tbody");
  private readonly messages = el("div", { class: "sim-messages" });

  constructor(private readonly api: Api, readonly simId: string,
              private readonly treeView: TreeView | null = null) {
    const exportButton = el("button", { id: "export-trace" }, "download trace");
    exportButton.addEventListener("click", () => void this.exportTrace());
    this.root = el("div", { class: "simulation" },
      this.stateLine,
      this.actionRow,
      el("label", {}, "successor ", this.nextState),
      this.messages,
      el("h3", {}, "trace"),
      el("table", { class: "trace" },
        el("thead", {}, el("tr", {},
          el("th", {}, "#"), el("th", {}, "state"), el("th", {}, "action"))),
        this.traceBody),
      exportButton);
  }

  async load(): Promise<void> {
    try {
      const trace = await this.api.simulationTrace(this.simId);
      this.allowed = trace.allowed;
      this.renderState(trace);
      this.renderTrace(trace);
    } catch (error) {
      const text = error instanceof ApiError
        ? `${error.kind}: ${error.detail}` : `service unreachable: ${error}`;
      this.messages.append(banner("error", text, () => void this.load()));
    }
  }

  showPath(path: PathDoc): void {
    this.path = path;
    this.treeView?.setHighlight(pathNodeIds(path.steps, path.leaf));
  }

  private renderState(trace: TraceDoc): void {
    this.stateLine.textContent =
      `current state: (${trace.current_state.join(", ")})`;
    clear(this.actionRow);
    // buttons are restricted to the leaf's allowed set by construction
    for (const action of this.allowed) {
      const button = el("button", { class: "action", "data-action": action },
                        action);
      button.addEventListener("click", () => void this.step(action));
      this.actionRow.append(button);
    }
  }

  private renderTrace(trace: TraceDoc): void {
    clear(this.traceBody);
    trace.trace.forEach((entry, k) => {
      this.traceBody.append(el("tr", {},
        el("td", {}, String(k + 1)),
        el("td", {}, `(${entry.state.join(", ")})`),
        el("td", {}, entry.action)));
    });
  }

  async step(action: string): Promise<void> {
    clear(this.messages);
    const raw = this.nextState.value.trim();
    const nextState = raw === "" ? undefined
      : raw.split(",").map((tok) => {
          const value = Number(tok);
          return Number.isFinite(value) ? value : tok.trim();
        });
    try {
      const response = await this.api.simulationStep(this.simId, action, nextState);
      this.nextState.value = "";
      this.showPath(response.path);
      await this.load();
    } catch (error) {
      if (error instanceof ApiError) {
        this.messages.append(banner("error", `${error.kind}: ${error.detail}`));
      } else {
        this.messages.append(banner("error", String(error)));
      }
    }
  }

  async exportTrace(): Promise<void> {
    const trace = await this.api.simulationTrace(this.simId);
    download(`trace-${this.simId}.json`, JSON.stringify(trace, null, 2));
  }
}
