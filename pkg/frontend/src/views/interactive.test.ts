/** Thin-client checks: every rendered number must equal what the stubbed
 * network returned — the view computes nothing itself. */

import { afterEach, describe, expect, it, vi } from "vitest";

import { Api } from "../api.js";
import { InteractiveView } from "./interactive.js";

const NODE_REPORT = {
  node_id: 0,
  size: 4,
  numeric: [
    { name: "v_o", minimum: 0, maximum: 4, step: 2 },
    { name: "v_f", minimum: 0, maximum: 6, step: 2 },
  ],
  categorical: {},
  label_histogram: [[["neu"], 1], [["acc", "dec", "neu"], 2], [["dec", "neu"], 1]],
  action_histogram: { acc: 2, dec: 3, neu: 4 },
  candidates: [
    { display: "v_f <= 5", impurity: 0.5, domain: "axis" },
    { display: "v_o <= 1", impurity: 0.6887218755408672, domain: "axis" },
  ],
  template_candidates: [],
  open_nodes: [0],
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), { status });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("InteractiveView", () => {
  it("renders node statistics straight from the service report", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse(NODE_REPORT)));
    const view = new InteractiveView(new Api(), "s1");
    document.body.append(view.root);
    await view.load();
    const rows = [...view.root.querySelectorAll(".var-stats tbody tr")];
    expect(rows[0].textContent).toBe("v_o042");
    const first = view.root.querySelector(".candidate-list li")!;
    expect(first.textContent).toContain("v_f <= 5");
    expect(first.textContent).toContain("0.5");
    view.root.remove();
  });

  it("shows the evaluated impurity exactly as served", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.endsWith("/node")) {
        return jsonResponse(NODE_REPORT);
      }
      return jsonResponse({
        display: "v_o <= 0",
        impurity: 0.6887218755408672,
        branch_sizes: [1, 3],
        branch_common: [["neu"], ["dec", "neu"]],
      });
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = new InteractiveView(new Api(), "s1");
    document.body.append(view.root);
    await view.load();

    const box = view.root.querySelector<HTMLInputElement>("#expr")!;
    box.value = "v_o <= 0";
    view.root.querySelector<HTMLButtonElement>("#evaluate")!.click();
    await vi.waitFor(() => {
      const text = view.root.querySelector("#eval-result")!.textContent!;
      // the view made no computation: these digits came from the wire
      expect(text).toContain("0.6887");
      expect(text).toContain("(1, 3)");
    });
    expect(fetchMock.mock.calls.some(
      (c) => String(c[0]).endsWith("/evaluate"))).toBe(true);
    view.root.remove();
  });

  it("renders parse errors with their position", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.endsWith("/node")) {
        return jsonResponse(NODE_REPORT);
      }
      return jsonResponse(
        { error: { kind: "ParseError",
                   detail: "expected a comparator, found 'end of input' at column 7" } },
        400);
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = new InteractiveView(new Api(), "s1");
    document.body.append(view.root);
    await view.load();
    view.root.querySelector<HTMLInputElement>("#expr")!.value = "v_o <=";
    view.root.querySelector<HTMLButtonElement>("#evaluate")!.click();
    await vi.waitFor(() => {
      const error = view.root.querySelector(".parse-error");
      expect(error).not.toBeNull();
      expect(error!.textContent).toContain("column 7");
    });
    view.root.remove();
  });

  it("applies a predicate and reloads the next open node", async () => {
    const calls: string[] = [];
    let split = false;
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      calls.push(url);
      if (url.endsWith("/split")) {
        expect(JSON.parse(String(init!.body))).toEqual({ expr: "v_o <= 0" });
        split = true;
        return jsonResponse({ split_node: 0, cursor: 2, open_nodes: [2] });
      }
      if (!split) {
        return jsonResponse(NODE_REPORT);
      }
      return jsonResponse({ ...NODE_REPORT, node_id: 2, size: 3 });
    });
    vi.stubGlobal("fetch", fetchMock);
    let changed = 0;
    const view = new InteractiveView(new Api(), "s1", () => { changed += 1; });
    document.body.append(view.root);
    await view.load();
    view.root.querySelector<HTMLInputElement>("#expr")!.value = "v_o <= 0";
    view.root.querySelector<HTMLButtonElement>("#apply")!.click();
    await vi.waitFor(() => {
      expect(view.root.textContent).toContain("open node 2");
    });
    expect(changed).toBe(1);
    expect(calls.some((u) => u.endsWith("/split"))).toBe(true);
    view.root.remove();
  });

  it("reports completion once the session closes", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.endsWith("/autocomplete")) {
        return jsonResponse({ open_nodes: [] });
      }
      return jsonResponse(
        { error: { kind: "SessionClosed", detail: "no open node" } }, 400);
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = new InteractiveView(new Api(), "s1");
    document.body.append(view.root);
    await view.autocomplete();
    expect(view.root.querySelector(".done")).not.toBeNull();
    view.root.remove();
  });
});
