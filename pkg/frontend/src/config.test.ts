import { describe, expect, it } from "vitest";

import { describeConfig, emptyForm, toConfigDoc, validateForm } from "./config.js";

describe("validateForm", () => {
  it("accepts the defaults", () => {
    expect(validateForm(emptyForm())).toEqual([]);
  });

  it("rejects a negative priority before any request is made", () => {
    const form = emptyForm();
    form.priorities.axis = "-1";
    const problems = validateForm(form);
    expect(problems.some((p) => p.includes("priority of axis"))).toBe(true);
  });

  it("rejects priorities above one", () => {
    const form = emptyForm();
    form.priorities.linear = "1.5";
    expect(validateForm(form)).not.toEqual([]);
  });

  it("requires at least one positive domain", () => {
    const form = emptyForm();
    form.priorities = { axis: "0", categorical: "0", linear: "0", template: "0" };
    expect(validateForm(form).some((p) => p.includes("above 0"))).toBe(true);
  });

  it("accepts inf tolerance and rejects negatives", () => {
    const form = emptyForm();
    form.tolerance = "inf";
    expect(validateForm(form)).toEqual([]);
    form.tolerance = "-0.5";
    expect(validateForm(form)).not.toEqual([]);
  });

  it("requires an integer seed for the random determinizer", () => {
    const form = emptyForm();
    form.determinize = "random";
    form.seed = "x";
    expect(validateForm(form)).not.toEqual([]);
  });
});

describe("toConfigDoc", () => {
  it("keeps the document minimal for defaults", () => {
    expect(toConfigDoc(emptyForm())).toEqual({
      impurity: "entropy",
      determinize: "none",
    });
  });

  it("serializes tweaked fields", () => {
    const form = emptyForm();
    form.impurity = "multi-label-entropy";
    form.determinize = "safe-early-stop";
    form.priorities.linear = "0.5";
    form.tolerance = "inf";
    form.leafMode = "single";
    form.domainKnowledge = "x_0 <= c_0; c_0 in {1,2}\n# comment\n";
    expect(toConfigDoc(form)).toEqual({
      impurity: "multi-label-entropy",
      determinize: "safe-early-stop",
      priorities: { linear: 0.5 },
      tolerance: "inf",
      leaf_mode: "single",
      domain_knowledge: ["x_0 <= c_0; c_0 in {1,2}"],
    });
  });

  it("carries the seed only for the random determinizer", () => {
    const form = emptyForm();
    form.determinize = "random";
    form.seed = "7";
    expect(toConfigDoc(form).seed).toBe(7);
  });
});

describe("describeConfig", () => {
  it("summarizes the interesting parts", () => {
    const form = emptyForm();
    form.determinize = "safe-early-stop";
    form.priorities.linear = "0.5";
    expect(describeConfig(form)).toBe("entropy/safe-early-stop/linear=0.5");
  });
});
