import { afterEach, describe, expect, it, vi } from "vitest";

import { Api } from "../api.js";
import { ExperimentsView } from "./experiments.js";

const CONTROLLER = {
  controller_id: "c1",
  states: 4,
  permissive: true,
  variables: [{ name: "v_o", kind: "numeric" as const }],
  actions: ["acc", "dec", "neu"],
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), { status });
}

function makeView(api: Api): ExperimentsView {
  return new ExperimentsView(api, () => {}, () => {}, () => {});
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ExperimentsView", () => {
  it("rejects an invalid priority client-side, before any POST", async () => {
    const fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
    const view = makeView(new Api());
    view.controller = CONTROLLER;
    document.body.append(view.root);

    const input = view.root.querySelector<HTMLInputElement>("#priority-axis")!;
    input.value = "-1";
    input.dispatchEvent(new Event("input"));
    view.root.querySelector<HTMLButtonElement>("#queue")!.click();
    await Promise.resolve();

    expect(fetchMock).not.toHaveBeenCalled();
    expect(view.root.querySelector(".problems")!.textContent)
      .toContain("priority of axis");
    view.root.remove();
  });

  it("shows queued experiments and their results after polling", async () => {
    const stats = [
      { total_nodes: 5, inner_nodes: 2, leaves: 3, depth: 2, exact: true,
        config_fingerprint: "f1" },
      { total_nodes: 1, inner_nodes: 0, leaves: 1, depth: 0, exact: false,
        config_fingerprint: "f2" },
    ];
    let submissions = 0;
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      if (url === "/api/v1/experiments" && init?.method === "POST") {
        submissions += 1;
        return jsonResponse({ experiment_id: `e${submissions}` });
      }
      const match = /\/api\/v1\/experiments\/(e\d)$/.exec(url);
      if (match) {
        const index = Number(match[1].slice(1)) - 1;
        return jsonResponse({ experiment_id: match[1], status: "done",
                              stats: stats[index] });
      }
      throw new Error(`unexpected fetch ${url}`);
    });
    vi.stubGlobal("fetch", fetchMock);

    const view = makeView(new Api());
    view.controller = CONTROLLER;
    document.body.append(view.root);
    await view.queueExperiment();
    view.form.determinize = "safe-early-stop";
    await view.queueExperiment();
    expect(view.root.querySelectorAll(".queue tbody tr")).toHaveLength(2);

    await view.poll();
    const rows = [...view.root.querySelectorAll(".results tbody tr")];
    expect(rows).toHaveLength(2);
    const nodeCounts = rows.map((r) => r.children[2].textContent);
    expect(nodeCounts).toEqual(["5", "1"]);
    view.root.remove();
  });

  it("shows a retry banner when the service is down", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("connection refused");
    }));
    const view = makeView(new Api());
    view.controller = CONTROLLER;
    document.body.append(view.root);
    await view.queueExperiment();
    const bannerNode = view.root.querySelector(".banner-error");
    expect(bannerNode).not.toBeNull();
    expect(bannerNode!.textContent).toContain("service unreachable");
    expect(bannerNode!.querySelector("button.retry")).not.toBeNull();
    view.root.remove();
  });

  it("failed experiments surface their error in the queue", async () => {
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      if (init?.method === "POST") {
        return jsonResponse({ experiment_id: "e9" });
      }
      return jsonResponse({ experiment_id: "e9", status: "failed",
                            error: "EmptyController: no states" });
    });
    vi.stubGlobal("fetch", fetchMock);
    const view = makeView(new Api());
    view.controller = CONTROLLER;
    document.body.append(view.root);
    await view.queueExperiment();
    await view.poll();
    expect(view.root.querySelector(".status-failed")!.textContent)
      .toContain("EmptyController");
    view.root.remove();
  });
});
