/** Application shell: hash routing between the experiments dashboard,
 * the tree inspector, the interactive session and the simulation view. */

import { Api } from "./api.js";
import { banner, clear, el } from "./dom.js";
import { ExperimentsView } from "./views/experiments.js";
import { InteractiveView } from "./views/interactive.js";
import { SimulationView } from "./views/simulation.js";
import { TreeView } from "./views/tree.js";

const api = new Api();

function mount(view: HTMLElement): void {
  const outlet = document.getElementById("app");
  if (!outlet) {
    return;
  }
  clear(outlet as HTMLElement);
  outlet.append(view);
}

let experiments: ExperimentsView | null = null;

function showExperiments(): void {
  if (!experiments) {
    experiments = new ExperimentsView(
      api,
      (experimentId) => {
        location.hash = `#/tree/${experimentId}`;
      },
      (experimentId) => void startSimulation(experimentId),
      (controllerId, config) => void startSession(controllerId, config));
  }
  mount(experiments.root);
}

async function showTree(experimentId: string): Promise<void> {
  const view = new TreeView(api, experimentId);
  mount(el("div", {}, backLink(), view.root));
  await view.load();
}

async function startSession(controllerId: string, config: unknown): Promise<void> {
  const { session_id } = await api.openSession(controllerId, config);
  location.hash = `#/session/${session_id}`;
}

async function showSession(sessionId: string): Promise<void> {
  const treePanel = el("div", { class: "session-tree" });
  const refreshTree = async () => {
    clear(treePanel);
    const doc = await api.sessionTree(sessionId);
    const pre = el("pre", { class: "tree-json" }, JSON.stringify(doc.root, null, 1));
    treePanel.append(el("h3", {}, "partial tree"), pre);
  };
  const view = new InteractiveView(api, sessionId, () => void refreshTree());
  mount(el("div", { class: "two-col" },
           el("div", {}, backLink(), view.root), treePanel));
  await view.load();
  await refreshTree();
}

async function startSimulation(experimentId: string): Promise<void> {
  const raw = prompt("initial state (comma separated)?");
  if (raw === null) {
    return;
  }
  const state = raw.split(",").map((tok) => {
    const value = Number(tok);
    return Number.isFinite(value) ? value : tok.trim();
  });
  try {
    const { sim_id } = await api.openSimulation(experimentId, state);
    location.hash = `#/sim/${sim_id}/${experimentId}`;
  } catch (error) {
    alert(String(error));
  }
}

async function showSimulation(simId: string, experimentId: string): Promise<void> {
  const treeView = new TreeView(api, experimentId);
  const view = new SimulationView(api, simId, treeView);
  mount(el("div", {}, backLink(),
           el("div", { class: "two-col" }, view.root, treeView.root)));
  await treeView.load();
  await view.load();
}

function backLink(): HTMLElement {
  const link = el("a", { href: "#/", class: "back" }, "← experiments");
  return link;
}

async function route(): Promise<void> {
  const hash = location.hash || "#/";
  const parts = hash.slice(2).split("/").filter(Boolean);
  try {
    if (parts.length === 0) {
      showExperiments();
    } else if (parts[0] === "tree" && parts[1]) {
      await showTree(parts[1]);
    } else if (parts[0] === "session" && parts[1]) {
      await showSession(parts[1]);
    } else if (parts[0] === "sim" && parts[1] && parts[2]) {
      await showSimulation(parts[1], parts[2]);
    } else {
      showExperiments();
    }
  } catch (error) {
    mount(banner("error", `navigation failed: ${error}`, () => void route()));
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
