/** Interactive predicate selection: statistics for the open node, the
 * ranked automatic and template candidates, and a free-text predicate box
 * whose impurity is evaluated by the service on submit.  Nothing is
 * computed locally. */

import { Api, ApiError, CandidateReport, NodeReport, formatImpurity } from "../api.js";
import { banner, clear, el } from "../dom.js";

export class InteractiveView {
  readonly root: HTMLElement;
  report: NodeReport | null = null;
  private readonly stats = el("div", { class: "node-stats" });
  private readonly candidates = el("div", { class: "candidates" });
  private readonly evalBox = el("input", {
    id: "expr", type: "text", placeholder: "e.g. v_o <= 0 or d + (v_f - v_o)*2 > 5",
  });
  private readonly evalResult = el("div", { class: "eval-result", id: "eval-result" });
  private readonly controls = el("div", { class: "session-controls" });

  constructor(private readonly api: Api, readonly sessionId: string,
              private readonly onTreeChanged?: () => void) {
    const evalButton = el("button", { id: "evaluate" }, "evaluate");
    evalButton.addEventListener("click", () => void this.evaluate());
    const applyButton = el("button", { id: "apply" }, "apply predicate");
    applyButton.addEventListener("click", () => void this.split());
    const autoButton = el("button", { id: "autocomplete" }, "autocomplete rest");
    autoButton.addEventListener("click", () => void this.autocomplete());
    this.evalBox.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") {
        void this.evaluate();
      }
    });
    this.root = el("div", { class: "interactive" },
      this.stats,
      this.candidates,
      el("div", { class: "eval-row" }, this.evalBox, evalButton, applyButton,
         autoButton),
      this.evalResult,
      this.controls);
  }

  async load(): Promise<void> {
    try {
      this.report = await this.api.sessionNode(this.sessionId);
      this.render();
    } catch (error) {
      if (error instanceof ApiError && error.kind === "SessionClosed") {
        clear(this.stats);
        clear(this.candidates);
        clear(this.controls);
        this.stats.append(el("p", { class: "done" },
                             "construction finished: no open nodes"));
        this.onTreeChanged?.();
        return;
      }
      const text = error instanceof ApiError
        ? `${error.kind}: ${error.detail}` : `service unreachable: ${error}`;
      this.stats.append(banner("error", text, () => void this.load()));
    }
  }

  private render(): void {
    if (!this.report) {
      return;
    }
    const report = this.report;
    clear(this.stats);
    this.stats.append(el("h3", {},
      `open node ${report.node_id} — ${report.size} states`));
    const varTable = el("table", { class: "var-stats" },
      el("thead", {}, el("tr", {},
        el("th", {}, "variable"), el("th", {}, "min"),
        el("th", {}, "max"), el("th", {}, "step"))));
    const body = el("tbody");
    for (const v of report.numeric) {
      body.append(el("tr", {},
        el("td", {}, v.name), el("td", {}, String(v.minimum)),
        el("td", {}, String(v.maximum)), el("td", {}, String(v.step))));
    }
    varTable.append(body);
    this.stats.append(varTable);
    for (const [name, hist] of Object.entries(report.categorical)) {
      const entries = Object.entries(hist)
        .map(([token, count]) => `${token}: ${count}`).join(", ");
      this.stats.append(el("p", {}, `${name}: ${entries}`));
    }
    const labels = report.label_histogram
      .map(([actions, count]) => `{${actions.join(",")}} ×${count}`).join("   ");
    this.stats.append(el("p", { class: "label-hist" }, labels));

    clear(this.candidates);
    this.candidates.append(
      this.candidateList("automatic candidates", report.candidates),
      this.candidateList("domain-knowledge candidates", report.template_candidates));

    clear(this.controls);
    for (const nodeId of report.open_nodes) {
      const go = el("button", { class: "goto", "data-node": String(nodeId) },
                    `go to node ${nodeId}`);
      go.addEventListener("click", () => void this.goto(nodeId));
      this.controls.append(go);
    }
  }

  private candidateList(title: string, items: CandidateReport[]): HTMLElement {
    const list = el("ol", { class: "candidate-list" });
    for (const item of items) {
      const use = el("button", { class: "use" }, "use");
      use.addEventListener("click", () => {
        this.evalBox.value = item.display;
        void this.evaluate();
      });
      list.append(el("li", {},
        el("code", {}, item.display),
        ` impurity ${formatImpurity(item.impurity)} [${item.domain}] `, use));
    }
    return el("div", {}, el("h3", {}, title),
              items.length ? list : el("p", { class: "empty" }, "none"));
  }

  async evaluate(): Promise<void> {
    clear(this.evalResult);
    try {
      const report = await this.api.sessionEvaluate(this.sessionId,
                                                    this.evalBox.value);
      const commons = report.branch_common
        .map((c) => `{${c.join(",")}}`).join(" / ");
      this.evalResult.append(el("p", {},
        el("code", {}, report.display),
        ` impurity ${formatImpurity(report.impurity)}, ` +
        `branch sizes (${report.branch_sizes.join(", ")}), ` +
        `common ${commons}`));
    } catch (error) {
      if (error instanceof ApiError) {
        this.evalResult.append(el("p", { class: "parse-error" },
                                  `${error.kind}: ${error.detail}`));
      } else {
        this.evalResult.append(banner("error", String(error)));
      }
    }
  }

  async split(): Promise<void> {
    try {
      await this.api.sessionSplit(this.sessionId, this.evalBox.value);
      this.onTreeChanged?.();
      await this.load();
    } catch (error) {
      if (error instanceof ApiError) {
        this.evalResult.append(el("p", { class: "parse-error" },
                                  `${error.kind}: ${error.detail}`));
      }
    }
  }

  async autocomplete(): Promise<void> {
    await this.api.sessionAutocomplete(this.sessionId);
    this.onTreeChanged?.();
    await this.load();
  }

  async goto(nodeId: number): Promise<void> {
    await this.api.sessionGoto(this.sessionId, nodeId);
    this.onTreeChanged?.();
    await this.load();
  }
}
