/** Experiments dashboard: controller upload, a hyper-parameter sidebar,
 * a live queue table and a results table with per-row inspect/simulate
 * links. */

import { Api, ApiError, ControllerInfo, ExperimentStatus } from "../api.js";
import { ConfigForm, DETERMINIZERS, IMPURITIES, PRIORITY_DOMAINS,
         describeConfig, emptyForm, toConfigDoc, validateForm } from "../config.js";
import { banner, clear, el } from "../dom.js";

interface QueueRow {
  experimentId: string;
  label: string;
  status: ExperimentStatus;
}

export class ExperimentsView {
  readonly root: HTMLElement;
  controller: ControllerInfo | null = null;
  readonly form: ConfigForm = emptyForm();
  private readonly rows = new Map<string, QueueRow>();
  private readonly problems = el("ul", { class: "problems" });
  private readonly queueBody = el("tbody");
  private readonly resultsBody = el("tbody");
  private readonly controllerLine = el("p", { class: "controller-line" },
                                        "no controller uploaded yet");
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly api: Api,
              private readonly onInspect: (experimentId: string) => void,
              private readonly onSimulate: (experimentId: string) => void,
              private readonly onInteractive: (controllerId: string,
                                               config: unknown) => void) {
    this.root = el("div", { class: "experiments two-col" });
    this.root.append(this.sidebar(), this.tables());
  }

  private sidebar(): HTMLElement {
    const csv = el("input", { type: "file", id: "csv-file" });
    const strategy = el("input", { type: "file", id: "strategy-file" });
    const metadata = el("input", { type: "file", id: "metadata-file" });
    const dk = el("input", { type: "file", id: "dk-file" });
    const transitions = el("input", { type: "file", id: "transitions-file" });

    const uploadButton = el("button", { id: "upload" }, "upload controller");
    uploadButton.addEventListener("click", async () => {
      const form = new FormData();
      const pairs: [string, HTMLInputElement][] = [
        ["csv", csv], ["strategy-json", strategy], ["metadata", metadata],
        ["dk", dk], ["transitions", transitions]];
      for (const [field, input] of pairs) {
        if (input.files && input.files[0]) {
          form.append(field, input.files[0]);
        }
      }
      await this.guard(async () => {
        const { controller_id } = await this.api.uploadController(form);
        this.controller = await this.api.controllerInfo(controller_id);
        this.renderControllerLine();
      });
    });

    const impurity = el("select", { id: "impurity" });
    for (const name of IMPURITIES) {
      impurity.append(el("option", { value: name }, name));
    }
    impurity.addEventListener("change", () => {
      this.form.impurity = impurity.value;
    });

    const determinize = el("select", { id: "determinize" });
    for (const name of DETERMINIZERS) {
      determinize.append(el("option", { value: name }, name));
    }
    const seed = el("input", { id: "seed", type: "number", value: "0" });
    determinize.addEventListener("change", () => {
      this.form.determinize = determinize.value;
    });
    seed.addEventListener("change", () => {
      this.form.seed = seed.value;
    });

    const priorityInputs = PRIORITY_DOMAINS.map((domain) => {
      const input = el("input", {
        id: `priority-${domain}`, type: "number", step: "0.1",
        min: "0", max: "1", value: "1",
      });
      input.addEventListener("input", () => {
        this.form.priorities[domain] = input.value;
      });
      return el("label", {}, `${domain} `, input);
    });

    const tolerance = el("input", { id: "tolerance", value: "0" });
    tolerance.addEventListener("input", () => {
      this.form.tolerance = tolerance.value;
    });
    const leafMode = el("select", { id: "leaf-mode" });
    for (const mode of ["", "single", "common-set"]) {
      leafMode.append(el("option", { value: mode }, mode || "(default)"));
    }
    leafMode.addEventListener("change", () => {
      this.form.leafMode = leafMode.value as ConfigForm["leafMode"];
    });
    const dkText = el("textarea", { id: "dk-text", rows: "3",
                                    placeholder: "domain knowledge, one template per line" });
    dkText.addEventListener("input", () => {
      this.form.domainKnowledge = dkText.value;
    });

    const queueButton = el("button", { id: "queue" }, "queue experiment");
    queueButton.addEventListener("click", () => this.queueExperiment());
    const sessionButton = el("button", { id: "interactive" }, "interactive session");
    sessionButton.addEventListener("click", () => {
      if (!this.controller) {
        this.showProblems(["upload a controller first"]);
        return;
      }
      const problems = validateForm(this.form);
      if (problems.length > 0) {
        this.showProblems(problems);
        return;
      }
      this.onInteractive(this.controller.controller_id, toConfigDoc(this.form));
    });

    return el("aside", { class: "sidebar" },
      el("h2", {}, "controller"),
      el("label", {}, "CSV ", csv),
      el("label", {}, "strategy JSON ", strategy),
      el("label", {}, "metadata ", metadata),
      el("label", {}, "domain knowledge ", dk),
      el("label", {}, "transitions ", transitions),
      uploadButton,
      this.controllerLine,
      el("h2", {}, "hyper-parameters"),
      el("label", {}, "impurity ", impurity),
      el("label", {}, "determinizer ", determinize),
      el("label", {}, "seed ", seed),
      el("fieldset", {}, el("legend", {}, "priorities"), ...priorityInputs),
      el("label", {}, "grouping tolerance ", tolerance),
      el("label", {}, "leaf mode ", leafMode),
      dkText,
      this.problems,
      queueButton,
      sessionButton);
  }

  private tables(): HTMLElement {
    return el("section", { class: "tables" },
      el("h2", {}, "experiment queue"),
      el("table", { class: "queue" },
        el("thead", {}, el("tr", {},
          el("th", {}, "id"), el("th", {}, "config"), el("th", {}, "status"))),
        this.queueBody),
      el("h2", {}, "results"),
      el("table", { class: "results" },
        el("thead", {}, el("tr", {},
          el("th", {}, "id"), el("th", {}, "config"), el("th", {}, "nodes"),
          el("th", {}, "inner"), el("th", {}, "depth"), el("th", {}, "exact"),
          el("th", {}, ""))),
        this.resultsBody));
  }

  private renderControllerLine(): void {
    if (!this.controller) {
      return;
    }
    this.controllerLine.textContent =
      `${this.controller.controller_id}: ${this.controller.states} states, ` +
      `${this.controller.variables.length} variables, ` +
      (this.controller.permissive ? "permissive" : "deterministic");
  }

  private showProblems(problems: string[]): void {
    clear(this.problems);
    for (const problem of problems) {
      this.problems.append(el("li", {}, problem));
    }
  }

  /** Client-side validation happens before any request is sent. */
  async queueExperiment(): Promise<void> {
    if (!this.controller) {
      this.showProblems(["upload a controller first"]);
      return;
    }
    const problems = validateForm(this.form);
    if (problems.length > 0) {
      this.showProblems(problems);
      return;
    }
    this.showProblems([]);
    const config = toConfigDoc(this.form);
    await this.guard(async () => {
      const { experiment_id } = await this.api.submitExperiment(
        this.controller!.controller_id, config);
      this.rows.set(experiment_id, {
        experimentId: experiment_id,
        label: describeConfig(this.form),
        status: { experiment_id, status: "queued" },
      });
      this.renderQueue();
      this.ensurePolling();
    });
  }

  private async guard(body: () => Promise<void>): Promise<void> {
    try {
      await body();
      const old = this.root.querySelector(".banner");
      if (old) {
        old.remove();
      }
    } catch (error) {
      const text = error instanceof ApiError
        ? `${error.kind}: ${error.detail}`
        : `service unreachable: ${error}`;
      const box = banner("error", text, () => box.remove());
      this.root.prepend(box);
    }
  }

  private ensurePolling(): void {
    if (this.timer !== null) {
      return;
    }
    this.timer = setInterval(() => void this.poll(), 500);
  }

  async poll(): Promise<void> {
    let pending = false;
    for (const row of this.rows.values()) {
      if (row.status.status === "done" || row.status.status === "failed") {
        continue;
      }
      try {
        row.status = await this.api.experimentStatus(row.experimentId);
      } catch {
        pending = true;
        continue;
      }
      if (row.status.status !== "done" && row.status.status !== "failed") {
        pending = true;
      }
    }
    this.renderQueue();
    this.renderResults();
    if (!pending && this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  renderQueue(): void {
    clear(this.queueBody);
    for (const row of this.rows.values()) {
      this.queueBody.append(el("tr", { "data-id": row.experimentId },
        el("td", {}, row.experimentId),
        el("td", {}, row.label),
        el("td", { class: `status-${row.status.status}` },
           row.status.status +
           (row.status.error ? ` (${row.status.error})` : ""))));
    }
  }

  renderResults(): void {
    clear(this.resultsBody);
    for (const row of this.rows.values()) {
      if (row.status.status !== "done" || !row.status.stats) {
        continue;
      }
      const stats = row.status.stats;
      const inspect = el("button", { class: "inspect", title: "inspect tree" }, "👁");
      inspect.addEventListener("click", () => this.onInspect(row.experimentId));
      const simulate = el("button", { class: "simulate" }, "simulate");
      simulate.addEventListener("click", () => this.onSimulate(row.experimentId));
      this.resultsBody.append(el("tr", { "data-id": row.experimentId },
        el("td", {}, row.experimentId),
        el("td", {}, row.label),
        el("td", {}, String(stats.total_nodes)),
        el("td", {}, String(stats.inner_nodes)),
        el("td", {}, String(stats.depth)),
        el("td", {}, stats.exact ? "yes" : "no"),
        el("td", {}, inspect, " ", simulate)));
    }
  }
}
