"""Candidate predicate generation for one tree node.

Four domains: axis-aligned thresholds, pairwise +/- linear combinations,
categorical value groupings (greedy merge with a merge tolerance), and
user templates instantiated by coefficient enumeration plus curve fitting.
Generators only read the view and are safe to run in parallel.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from . import expressions as ex
from . import simplex
from .errors import DegenerateSplit, EnumerationBlowup, NonEvaluableExpression
from .impurity import (
    IMPURITY_ATOL,
    ImpurityMeasure,
    PartStats,
    split_impurity,
    split_impurity_from_parts,
)
from .ingest import PredicateTemplate
from .model import (
    Algebraic,
    AxisAligned,
    CategoricalGrouping,
    Linear,
    NodeView,
    Predicate,
    VariableMeta,
    display_predicate,
    eval_predicate_on_state,
)

#: per variable pair, at most this many linear thresholds (evenly subsampled)
MAX_LINEAR_THRESHOLDS = 32

#: hard cap on the finite-coefficient cartesian product of one template
MAX_ENUMERATION = 10_000


def eval_predicate(pred: Predicate, state: Sequence,
                   variables: Sequence[VariableMeta] | None = None) -> int:
    """Branch index of `state` under `pred` (0 = false branch)."""
    if variables is None:
        variables = tuple(VariableMeta(f"x_{i}") for i in range(len(state)))
    return eval_predicate_on_state(pred, tuple(state), variables)


def _midpoints(values: np.ndarray) -> np.ndarray:
    distinct = np.unique(values)
    if len(distinct) < 2:
        return np.empty(0)
    return (distinct[:-1] + distinct[1:]) / 2.0


def axis_aligned_candidates(view: NodeView, var: int) -> list[AxisAligned]:
    """One `s_var <= c` candidate per midpoint between consecutive distinct
    values of the variable on the view; empty when the variable is constant."""
    if view.controller.variables[var].kind != "numeric":
        raise ValueError(f"variable {var} is not numeric")
    return [AxisAligned(var, float(c)) for c in _midpoints(view.column(var))]


def _subsample(values: np.ndarray, cap: int) -> np.ndarray:
    if len(values) <= cap:
        return values
    idx = np.unique(np.round(np.linspace(0, len(values) - 1, cap)).astype(int))
    return values[idx]


def linear_candidates(view: NodeView,
                      max_thresholds: int = MAX_LINEAR_THRESHOLDS) -> list[Linear]:
    """Pairwise difference and sum features over the numeric variables:
    `s_i - s_j <= c` and `s_i + s_j <= c` for every unordered pair."""
    numeric = view.controller.numeric_indices()
    n_vars = len(view.controller.variables)
    out: list[Linear] = []
    for i, j in itertools.combinations(numeric, 2):
        ci, cj = view.column(i), view.column(j)
        for sign in (-1.0, 1.0):
            thresholds = _subsample(_midpoints(ci + sign * cj), max_thresholds)
            if not len(thresholds):
                continue
            coeffs = [0.0] * n_vars
            coeffs[i], coeffs[j] = 1.0, sign
            for c in thresholds:
                out.append(Linear(tuple(coeffs), float(c)))
    return out


# --------------------------------------------------------------------------
# categorical attribute-value grouping


def _value_parts(view: NodeView, var: int) -> tuple[list[str], list[PartStats]]:
    dictionary = view.controller.variables[var].dictionary or ()
    codes = view.column(var).astype(np.int64)
    set_ids = view.controller.set_ids[view.indices]
    membership = view.controller.membership[view.indices]
    n_sets = len(view.controller.set_table)
    values, parts = [], []
    for code in range(len(dictionary)):
        mask = codes == code
        count = int(mask.sum())
        if count == 0:
            continue
        values.append(dictionary[code])
        parts.append(PartStats(count,
                               np.bincount(set_ids[mask], minlength=n_sets),
                               membership[mask].sum(axis=0)))
    return values, parts


def _merged(a: PartStats, b: PartStats) -> PartStats:
    return PartStats(a.size + b.size, a.label_counts + b.label_counts,
                     a.action_counts + b.action_counts)


def categorical_grouping(view: NodeView, var: int, measure: ImpurityMeasure,
                         tolerance: float = 0.0) -> CategoricalGrouping:
    """Greedy attribute-value grouping (Quinlan's C4.5 merging scheme).

    Start with one group per value present on the view, then repeatedly
    merge the pair whose merged split scores best, as long as that score
    is at most the current score plus `tolerance`.  Merging always stops
    at two groups; tolerance=inf therefore forces a binary split.  Among
    merges scoring equally the larger merged group wins, then the
    lexicographically smaller one, making the merge chain deterministic
    and independent of the tolerance.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    values, parts = _value_parts(view, var)
    if len(values) < 2:
        raise DegenerateSplit(
            f"variable {view.controller.variables[var].name!r} has a single "
            f"value on this view")

    groups: list[tuple[str, ...]] = [(v,) for v in values]
    current = split_impurity_from_parts(parts, measure)
    while len(groups) > 2:
        best = None  # (impurity, -merged_size, merged_tokens, i, j, merged_part)
        for i, j in itertools.combinations(range(len(groups)), 2):
            m = _merged(parts[i], parts[j])
            trial = parts[:i] + [m] + parts[i + 1:j] + parts[j + 1:]
            imp = split_impurity_from_parts(trial, measure)
            tokens = tuple(sorted(groups[i] + groups[j]))
            key = (imp, -(len(tokens)), tokens)
            if best is None or _merge_key_lt(key, best[0]):
                best = (key, i, j, m)
        (imp, _, _), i, j, merged_part = best
        if not (imp <= current + tolerance):
            break
        groups = groups[:i] + [groups[i] + groups[j]] + groups[i + 1:j] + groups[j + 1:]
        parts = parts[:i] + [merged_part] + parts[i + 1:j] + parts[j + 1:]
        current = imp

    dictionary = view.controller.variables[var].dictionary or ()
    order = {tok: k for k, tok in enumerate(dictionary)}
    final = [tuple(sorted(g, key=order.get)) for g in groups]
    # dictionary values absent from this view go with the largest group
    absent = [tok for tok in dictionary if not any(tok in g for g in final)]
    if absent:
        big = max(range(len(final)), key=lambda k: len(final[k]))
        final[big] = tuple(sorted(final[big] + tuple(absent), key=order.get))
    return CategoricalGrouping(var, tuple(final))


def _merge_key_lt(a, b) -> bool:
    """Order merge candidates: impurity first (with absolute tolerance),
    then the tie-break key (largest group, smallest contents)."""
    if a[0] < b[0] - IMPURITY_ATOL:
        return True
    if a[0] > b[0] + IMPURITY_ATOL:
        return False
    return a[1:] < b[1:]


# --------------------------------------------------------------------------
# domain-knowledge templates


_MIRROR = {"<=": ">=", ">=": "<=", "<": ">", ">": "<", "=": "="}


def _bare_rearrangement(lhs: ex.Expression, cmp: str, rhs: ex.Expression,
                        coef: str) -> tuple[ex.Expression, str] | None:
    """When the template reads `g(s) CMP c` (or mirrored), return (g, CMP')."""
    if isinstance(rhs, ex.Name) and rhs.ident == coef and coef not in ex.free_names(lhs):
        return lhs, cmp
    if isinstance(lhs, ex.Name) and lhs.ident == coef and coef not in ex.free_names(rhs):
        return rhs, _MIRROR[cmp]
    return None


def _provenance(lhs: ex.Expression, cmp: str, rhs: ex.Expression) -> str:
    return f"{ex.to_text(lhs)} {cmp} {ex.to_text(rhs)}"


def _view_env(view: NodeView) -> dict:
    env: dict = {}
    variables = view.controller.variables
    for i, var in enumerate(variables):
        if var.kind == "numeric":
            env[f"x_{i}"] = view.column(i)
    for i, var in enumerate(variables):
        if var.kind == "numeric":
            env[var.name] = view.column(i)
    return env


def instantiate_templates(templates: Sequence[PredicateTemplate], view: NodeView,
                          measure: ImpurityMeasure,
                          max_enumeration: int = MAX_ENUMERATION,
                          dropped: list | None = None) -> list[Algebraic]:
    """Concretize templates on a view: enumerate every finite-coefficient
    assignment (one emitted predicate each) and fit arbitrary coefficients,
    either by a threshold scan when the template rearranges to
    `g(s) CMP c_free` or by simplex search on the split impurity.

    Candidates that cannot be evaluated on some view state are dropped and
    reported through `dropped`, never raised.
    """
    out: list[Algebraic] = []
    for template in templates:
        finite = [(name, spec.values) for name, spec in sorted(template.coefficients.items())
                  if spec.is_finite]
        free = [name for name, spec in sorted(template.coefficients.items())
                if not spec.is_finite]
        total = math.prod(len(v) for _, v in finite) if finite else 1
        if total > max_enumeration:
            raise EnumerationBlowup(
                f"template {template.source!r} enumerates {total} assignments "
                f"(cap {max_enumeration})")

        for combo in itertools.product(*(v for _, v in finite)):
            bindings = dict(zip((n for n, _ in finite), combo))
            lhs = ex.substitute(template.lhs, bindings)
            rhs = ex.substitute(template.rhs, bindings)
            try:
                pred = _resolve_free(lhs, template.comparator, rhs, free, view, measure)
            except NonEvaluableExpression as e:
                if dropped is not None:
                    dropped.append((_provenance(lhs, template.comparator, rhs), str(e)))
                continue
            out.append(pred)
    return out


def _resolve_free(lhs: ex.Expression, cmp: str, rhs: ex.Expression,
                  free: list[str], view: NodeView,
                  measure: ImpurityMeasure) -> Algebraic:
    if not free:
        pred = Algebraic(lhs, cmp, rhs, _provenance(lhs, cmp, rhs))
        split_impurity(pred, view, measure)  # force NonEvaluable now, not at ranking
        return pred

    if len(free) == 1:
        rearranged = _bare_rearrangement(lhs, cmp, rhs, free[0])
        if rearranged is not None:
            g, cmp2 = rearranged
            return _scan_threshold(g, cmp2, view, measure)

    env = _view_env(view)

    def objective(vector: np.ndarray) -> float:
        bindings = dict(zip(free, (float(v) for v in vector)))
        pred = Algebraic(ex.substitute(lhs, bindings), cmp,
                         ex.substitute(rhs, bindings))
        try:
            return split_impurity(pred, view, measure)
        except NonEvaluableExpression:
            return math.inf

    result = simplex.minimize(objective, [1.0] * len(free))
    bindings = {name: float(v) for name, v in zip(free, result.x)}
    lhs2, rhs2 = ex.substitute(lhs, bindings), ex.substitute(rhs, bindings)
    pred = Algebraic(lhs2, cmp, rhs2, _provenance(lhs2, cmp, rhs2))
    if not math.isfinite(objective(result.x)):
        # fit never found an evaluable point; surface the underlying error
        ex.evaluate(lhs2, env), ex.evaluate(rhs2, env)
    return pred


def _scan_threshold(g: ex.Expression, cmp: str, view: NodeView,
                    measure: ImpurityMeasure) -> Algebraic:
    """Fit the single free threshold of `g(s) CMP c` like an axis-aligned
    scan: midpoints of g's distinct values (the values themselves for `=`),
    keeping the best-scoring one."""
    values = ex.evaluate(g, _view_env(view))
    values = np.broadcast_to(np.asarray(values, dtype=np.float64), (len(view),))
    if cmp == "=":
        thresholds = np.unique(values)
    else:
        thresholds = _midpoints(values)
        if not len(thresholds):
            thresholds = np.unique(values)  # constant feature: still emit one
    best = None
    for c in thresholds:
        pred = Algebraic(g, cmp, ex.const(c))
        imp = split_impurity(pred, view, measure)
        if best is None or imp < best[0] - IMPURITY_ATOL:
            best = (imp, float(c))
    c = best[1]
    return Algebraic(g, cmp, ex.const(c), _provenance(g, cmp, ex.const(c)))


# --------------------------------------------------------------------------


def dedupe(candidates: list[Predicate],
           variables: Sequence[VariableMeta]) -> list[Predicate]:
    """Drop candidates equal to an earlier one up to a 1e-12 relative
    difference in threshold."""
    kept: list[Predicate] = []
    index: dict = {}
    for pred in candidates:
        if isinstance(pred, AxisAligned):
            key, threshold = ("axis", pred.var), pred.threshold
        elif isinstance(pred, Linear):
            key, threshold = ("linear", pred.coefficients), pred.threshold
        elif isinstance(pred, Algebraic) and isinstance(pred.rhs, ex.Num):
            key, threshold = ("alg", ex.to_text(pred.lhs), pred.comparator), pred.rhs.value
        else:
            key, threshold = ("other", display_predicate(pred, variables)), None
        seen = index.setdefault(key, [])
        if threshold is None:
            if seen:
                continue
            seen.append(None)
        else:
            if any(t is not None and math.isclose(t, threshold, rel_tol=1e-12)
                   for t in seen):
                continue
            seen.append(threshold)
        kept.append(pred)
    return kept
