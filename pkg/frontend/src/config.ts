/** Build-configuration form model and client-side validation.
 *
 * Validation mirrors the service's BuildConfig invariants so obviously
 * bad requests (a priority outside [0, 1], a negative tolerance) never
 * reach the network.
 */

export const IMPURITIES = [
  "entropy", "entropy-ratio", "gini", "twoing",
  "sum-minority", "max-minority", "multi-label-entropy", "multi-label-gini",
] as const;

export const DETERMINIZERS = [
  "none", "safe-early-stop", "maxfreq", "minnorm", "random",
] as const;

export const PRIORITY_DOMAINS = ["axis", "categorical", "linear", "template"] as const;

export interface ConfigForm {
  impurity: string;
  determinize: string;
  seed: string;
  priorities: Record<string, string>;
  tolerance: string;
  leafMode: "" | "single" | "common-set";
  maxDepth: string;
  domainKnowledge: string;
}

export function emptyForm(): ConfigForm {
  return {
    impurity: "entropy",
    determinize: "none",
    seed: "0",
    priorities: { axis: "1", categorical: "1", linear: "1", template: "1" },
    tolerance: "0",
    leafMode: "",
    maxDepth: "",
    domainKnowledge: "",
  };
}

export function validateForm(form: ConfigForm): string[] {
  const problems: string[] = [];
  let positive = false;
  for (const [domain, raw] of Object.entries(form.priorities)) {
    if (raw.trim() === "") {
      continue;
    }
    const value = Number(raw);
    if (!Number.isFinite(value) || value < 0 || value > 1) {
      problems.push(`priority of ${domain} must be a number in [0, 1]`);
    } else if (value > 0) {
      positive = true;
    }
  }
  if (!positive) {
    problems.push("at least one predicate domain needs a priority above 0");
  }
  const tol = form.tolerance.trim();
  if (tol !== "" && tol !== "inf") {
    const value = Number(tol);
    if (!Number.isFinite(value) || value < 0) {
      problems.push("tolerance must be a non-negative number or 'inf'");
    }
  }
  if (form.maxDepth.trim() !== "") {
    const depth = Number(form.maxDepth);
    if (!Number.isInteger(depth) || depth < 0) {
      problems.push("max depth must be a non-negative integer");
    }
  }
  if (form.determinize === "random" && !Number.isInteger(Number(form.seed))) {
    problems.push("the random determinizer needs an integer seed");
  }
  return problems;
}

/** Shape the form into the service's config document. */
export function toConfigDoc(form: ConfigForm): Record<string, unknown> {
  const doc: Record<string, unknown> = {
    impurity: form.impurity,
    determinize: form.determinize,
  };
  if (form.determinize === "random") {
    doc.seed = Number(form.seed);
  }
  const priorities: Record<string, number> = {};
  for (const [domain, raw] of Object.entries(form.priorities)) {
    if (raw.trim() !== "" && Number(raw) !== 1) {
      priorities[domain] = Number(raw);
    }
  }
  if (Object.keys(priorities).length > 0) {
    doc.priorities = priorities;
  }
  const tol = form.tolerance.trim();
  if (tol === "inf") {
    doc.tolerance = "inf";
  } else if (tol !== "" && Number(tol) !== 0) {
    doc.tolerance = Number(tol);
  }
  if (form.leafMode !== "") {
    doc.leaf_mode = form.leafMode;
  }
  if (form.maxDepth.trim() !== "") {
    doc.max_depth = Number(form.maxDepth);
  }
  const dk = form.domainKnowledge
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line !== "" && !line.startsWith("#"));
  if (dk.length > 0) {
    doc.domain_knowledge = dk;
  }
  return doc;
}

export function describeConfig(form: ConfigForm): string {
  const parts = [form.impurity, form.determinize];
  const tweaked = Object.entries(form.priorities)
    .filter(([, v]) => v.trim() !== "" && Number(v) !== 1)
    .map(([d, v]) => `${d}=${v}`);
  if (tweaked.length > 0) {
    parts.push(tweaked.join(","));
  }
  if (form.tolerance.trim() !== "" && form.tolerance.trim() !== "0") {
    parts.push(`tol=${form.tolerance.trim()}`);
  }
  return parts.join("/");
}
