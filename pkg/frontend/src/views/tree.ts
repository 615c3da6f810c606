/** Tree inspector: collapsible node-link diagram with per-node subtree
 * retraining.  Selecting a node keeps its id across collapse/expand; a
 * retrain that lands after further edits raises a stale warning instead
 * of silently overwriting. */

import { Api, ApiError, TreeDoc } from "../api.js";
import { banner, clear, el, svgEl } from "../dom.js";
import { Layout, layoutTree, pathNodeIds, pruneCollapsed } from "../treeLayout.js";

const X_STEP = 150;
const Y_STEP = 80;

export class TreeView {
  readonly root: HTMLElement;
  doc: TreeDoc | null = null;
  collapsed = new Set<number>();
  selected: number | null = null;
  /** bumps on every local edit; a retrain started under an older value is stale */
  revision = 0;
  highlight = new Set<number>();
  private readonly canvas = el("div", { class: "tree-canvas" });
  private readonly detail = el("div", { class: "node-detail" });

  constructor(private readonly api: Api, private treeId: string,
              private readonly onRetrained?: (experimentId: string) => void) {
    this.root = el("div", { class: "tree-view" }, this.canvas, this.detail);
  }

  async load(): Promise<void> {
    try {
      this.doc = await this.api.experimentTree(this.treeId);
      this.collapsed = pruneCollapsed(this.collapsed, this.doc);
      this.render();
    } catch (error) {
      clear(this.canvas);
      const text = error instanceof ApiError
        ? `${error.kind}: ${error.detail}` : `service unreachable: ${error}`;
      this.canvas.append(banner("error", text, () => void this.load()));
    }
  }

  setHighlight(ids: Set<number>): void {
    this.highlight = ids;
    this.render();
  }

  toggleCollapse(id: number): void {
    if (this.collapsed.has(id)) {
      this.collapsed.delete(id);
    } else {
      this.collapsed.add(id);
    }
    this.render();
  }

  select(id: number | null): void {
    this.selected = id;
    this.render();
  }

  render(): void {
    if (!this.doc) {
      return;
    }
    const layout = layoutTree(this.doc, this.collapsed);
    clear(this.canvas);
    this.canvas.append(this.svg(layout));
    this.renderDetail();
  }

  private svg(layout: Layout): SVGElement {
    const width = Math.max(layout.width * X_STEP, X_STEP);
    const height = (layout.depth + 1) * Y_STEP + 40;
    const svg = svgEl("svg", {
      viewBox: `0 0 ${width} ${height}`,
      width: String(width), height: String(height), class: "tree-svg",
    });
    const position = new Map<number, { x: number; y: number }>();
    for (const node of layout.nodes) {
      position.set(node.id, {
        x: node.x * X_STEP + X_STEP / 2,
        y: node.depth * Y_STEP + 30,
      });
    }
    for (const edge of layout.edges) {
      const from = position.get(edge.from)!;
      const to = position.get(edge.to)!;
      const onPath = this.highlight.has(edge.from) && this.highlight.has(edge.to);
      const line = svgEl("line", {
        x1: String(from.x), y1: String(from.y + 12),
        x2: String(to.x), y2: String(to.y - 14),
        class: onPath ? "edge highlighted" : "edge",
      });
      svg.append(line);
      const label = svgEl("text", {
        x: String((from.x + to.x) / 2),
        y: String((from.y + to.y) / 2),
        class: "edge-label",
      });
      label.textContent = edge.label;
      svg.append(label);
    }
    for (const node of layout.nodes) {
      const { x, y } = position.get(node.id)!;
      const group = svgEl("g", {
        class: ["node", node.kind,
                this.selected === node.id ? "selected" : "",
                this.highlight.has(node.id) ? "highlighted" : "",
                node.inexact ? "inexact" : ""].filter(Boolean).join(" "),
        "data-node-id": String(node.id),
        transform: `translate(${x}, ${y})`,
      });
      const shape = node.kind === "leaf"
        ? svgEl("ellipse", { rx: "64", ry: "16" })
        : svgEl("rect", { x: "-68", y: "-14", width: "136", height: "28", rx: "4" });
      group.append(shape);
      const text = svgEl("text", { class: "node-label", y: "4" });
      text.textContent = node.collapsed
        ? `${node.label} [+${node.hiddenLeaves}]`
        : node.label;
      group.append(text);
      group.addEventListener("click", () => this.select(node.id));
      group.addEventListener("dblclick", () => {
        if (node.kind === "inner") {
          this.toggleCollapse(node.id);
        }
      });
      svg.append(group);
    }
    return svg;
  }

  private renderDetail(): void {
    clear(this.detail);
    if (this.selected === null) {
      this.detail.append(el("p", {}, "select a node; double-click collapses"));
      return;
    }
    const id = this.selected;
    const retrainButton = el("button", { id: "retrain" },
                             `retrain subtree at node ${id} with config…`);
    const configBox = el("textarea", { id: "retrain-config", rows: "3" },
                         '{"impurity": "entropy", "determinize": "none"}');
    retrainButton.addEventListener("click", () => void this.retrain(id, configBox.value));
    this.detail.append(
      el("p", {}, `node ${id} selected`), configBox, retrainButton);
  }

  async retrain(nodeId: number, configText: string): Promise<void> {
    const startedAt = this.revision;
    let config: unknown;
    try {
      config = JSON.parse(configText);
    } catch (error) {
      this.detail.append(banner("error", `config is not valid JSON: ${error}`));
      return;
    }
    try {
      const { experiment_id } = await this.api.retrain(this.treeId, nodeId, config);
      const status = await this.waitDone(experiment_id);
      if (status !== "done") {
        this.detail.append(banner("error", `retrain ${experiment_id}: ${status}`));
        return;
      }
      if (this.revision !== startedAt) {
        this.detail.append(banner(
          "error", "tree changed while retraining; result not applied"));
        return;
      }
      this.treeId = experiment_id;
      this.revision += 1;
      await this.load();
      this.onRetrained?.(experiment_id);
    } catch (error) {
      const text = error instanceof ApiError
        ? `${error.kind}: ${error.detail}` : String(error);
      this.detail.append(banner("error", text));
    }
  }

  private async waitDone(experimentId: string): Promise<string> {
    for (let tries = 0; tries < 600; tries += 1) {
      const status = await this.api.experimentStatus(experimentId);
      if (status.status === "done" || status.status === "failed") {
        return status.status;
      }
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
    return "timeout";
  }
}
