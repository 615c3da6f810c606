import { afterEach, describe, expect, it, vi } from "vitest";

import { Api } from "../api.js";
import { SimulationView } from "./simulation.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), { status });
}

const TRACE_EMPTY = {
  current_state: [4, 4, 10],
  allowed: ["dec", "neu"],
  trace: [],
};

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("SimulationView", () => {
  it("offers exactly the allowed actions as buttons", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse(TRACE_EMPTY)));
    const view = new SimulationView(new Api(), "sim1");
    document.body.append(view.root);
    await view.load();
    const labels = [...view.root.querySelectorAll("button.action")]
      .map((b) => b.textContent);
    expect(labels).toEqual(["dec", "neu"]);
    expect(view.root.textContent).toContain("current state: (4, 4, 10)");
    view.root.remove();
  });

  it("steps through an action and refreshes the trace", async () => {
    let stepped = false;
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      if (url.endsWith("/step")) {
        stepped = true;
        expect(JSON.parse(String(init!.body))).toEqual(
          { action: "neu", next_state: [0, 0, 5] });
        return jsonResponse({
          path: { steps: [{ node: 0, predicate: "v_o > 0", branch: 1 }],
                  leaf: 3, actions: ["dec", "neu"] },
          state: [0, 0, 5],
          allowed: ["neu"],
        });
      }
      if (!stepped) {
        return jsonResponse(TRACE_EMPTY);
      }
      return jsonResponse({
        current_state: [0, 0, 5],
        allowed: ["neu"],
        trace: [{ state: [4, 4, 10], action: "neu",
                  path: { steps: [], leaf: 3, actions: ["dec", "neu"] } }],
      });
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = new SimulationView(new Api(), "sim1");
    document.body.append(view.root);
    await view.load();
    view.root.querySelector<HTMLInputElement>("#next-state")!.value = "0, 0, 5";
    view.root.querySelectorAll<HTMLButtonElement>("button.action")[1].click();
    await vi.waitFor(() => {
      expect(view.root.querySelectorAll(".trace tbody tr")).toHaveLength(1);
      expect(view.root.textContent).toContain("current state: (0, 0, 5)");
    });
    view.root.remove();
  });

  it("surfaces unknown-successor errors without advancing", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.endsWith("/step")) {
        return jsonResponse(
          { error: { kind: "UnknownSuccessor",
                     detail: "no successor on file" } }, 400);
      }
      return jsonResponse(TRACE_EMPTY);
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = new SimulationView(new Api(), "sim1");
    document.body.append(view.root);
    await view.load();
    view.root.querySelector<HTMLButtonElement>("button.action")!.click();
    await vi.waitFor(() => {
      expect(view.root.querySelector(".banner-error")!.textContent)
        .toContain("UnknownSuccessor");
    });
    view.root.remove();
  });
});
