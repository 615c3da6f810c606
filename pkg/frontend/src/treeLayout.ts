/** Collapsible node-link layout for tree documents.
 *
 * The service's tree JSON is a nested document; this module flattens it
 * into positioned nodes and edges for the SVG renderer, honouring a set
 * of collapsed node ids.  Layout is a simple tidy layering: leaves (and
 * collapsed subtrees) get consecutive slots, inner nodes sit centred
 * above their visible children.
 */

import type { PredDoc, TreeDoc, TreeNodeDoc } from "./api.js";

export interface LayoutNode {
  id: number;
  depth: number;
  /** slot index within the row; multiply by spacing for pixels */
  x: number;
  label: string;
  kind: "inner" | "leaf";
  inexact: boolean;
  collapsed: boolean;
  hiddenLeaves: number;
  pred?: PredDoc;
}

export interface LayoutEdge {
  from: number;
  to: number;
  label: string;
}

export interface Layout {
  nodes: LayoutNode[];
  edges: LayoutEdge[];
  depth: number;
  width: number;
}

export function isLeafDoc(node: TreeNodeDoc): node is { actions: number[]; inexact?: boolean } {
  return (node as { actions?: unknown }).actions !== undefined;
}

/** Stable preorder ids matching the service's export order. */
export function indexNodes(root: TreeNodeDoc): Map<number, TreeNodeDoc> {
  const index = new Map<number, TreeNodeDoc>();
  let next = 0;
  const walk = (node: TreeNodeDoc): void => {
    index.set(next, node);
    next += 1;
    if (!isLeafDoc(node)) {
      for (const child of node.children) {
        walk(child);
      }
    }
  };
  walk(root);
  return index;
}

export function leafLabel(node: { actions: number[]; inexact?: boolean },
                          actions: string[]): string {
  const names = node.actions.map((i) => actions[i] ?? `#${i}`);
  return `{${names.join(", ")}}` + (node.inexact ? " !" : "");
}

export function countLeaves(node: TreeNodeDoc): number {
  if (isLeafDoc(node)) {
    return 1;
  }
  return node.children.reduce((acc, child) => acc + countLeaves(child), 0);
}

export function edgeLabel(pred: PredDoc, branch: number): string {
  if (pred.type === "grouping" && pred.groups) {
    return (pred.groups[branch] ?? []).join(", ");
  }
  return branch === 1 ? "true" : "false";
}

export function layoutTree(doc: TreeDoc, collapsed: Set<number>): Layout {
  const nodes: LayoutNode[] = [];
  const edges: LayoutEdge[] = [];
  let nextSlot = 0;
  let nextId = 0;
  let maxDepth = 0;

  const walk = (node: TreeNodeDoc, depth: number): LayoutNode => {
    const id = nextId;
    nextId += 1;
    maxDepth = Math.max(maxDepth, depth);

    if (isLeafDoc(node)) {
      const out: LayoutNode = {
        id, depth, x: nextSlot, label: leafLabel(node, doc.actions),
        kind: "leaf", inexact: Boolean(node.inexact),
        collapsed: false, hiddenLeaves: 0,
      };
      nextSlot += 1;
      nodes.push(out);
      return out;
    }
    if (collapsed.has(id)) {
      // swallow the whole subtree but keep preorder ids stable
      const hidden = countLeaves(node);
      nextId += subtreeSize(node) - 1;
      const out: LayoutNode = {
        id, depth, x: nextSlot, label: node.pred.display,
        kind: "inner", inexact: false, collapsed: true, hiddenLeaves: hidden,
        pred: node.pred,
      };
      nextSlot += 1;
      nodes.push(out);
      return out;
    }
    const children = node.children.map((child, branch) => {
      const laid = walk(child, depth + 1);
      return { laid, branch };
    });
    const xs = children.map((c) => c.laid.x);
    const out: LayoutNode = {
      id, depth,
      x: (Math.min(...xs) + Math.max(...xs)) / 2,
      label: node.pred.display,
      kind: "inner", inexact: false, collapsed: false, hiddenLeaves: 0,
      pred: node.pred,
    };
    nodes.push(out);
    for (const { laid, branch } of children) {
      edges.push({ from: id, to: laid.id, label: edgeLabel(node.pred, branch) });
    }
    return out;
  };

  walk(doc.root, 0);
  nodes.sort((a, b) => a.id - b.id);
  return { nodes, edges, depth: maxDepth, width: nextSlot };
}

export function subtreeSize(node: TreeNodeDoc): number {
  if (isLeafDoc(node)) {
    return 1;
  }
  return 1 + node.children.reduce((acc, child) => acc + subtreeSize(child), 0);
}

/** Node ids on the root-to-leaf path of a served decision path. */
export function pathNodeIds(steps: { node: number }[], leaf: number): Set<number> {
  const ids = new Set<number>(steps.map((s) => s.node));
  ids.add(leaf);
  return ids;
}

/** Drop collapse marks whose nodes vanished after the tree changed. */
export function pruneCollapsed(collapsed: Set<number>, doc: TreeDoc): Set<number> {
  const valid = indexNodes(doc.root);
  return new Set([...collapsed].filter((id) => {
    const node = valid.get(id);
    return node !== undefined && !isLeafDoc(node);
  }));
}
