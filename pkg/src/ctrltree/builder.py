"""Recursive tree induction with priorities, determinization and
interactive sessions.

`build_tree` is a `BuildSession` that is immediately autocompleted, so
batch and interactive construction share one code path and one
deterministic frontier order (depth-first, false/left branch first).
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import expressions as ex
from . import predicates as pg
from .errors import (
    DegenerateSplit,
    EmptyController,
    InvalidPredicate,
    NoValidPredicate,
    SessionClosed,
    UnknownNode,
)
from .impurity import (
    IMPURITY_ATOL,
    DetMode,
    Determinizer,
    ImpurityMeasure,
    common_actions,
    determinize_preprocess,
    split_impurity,
)
from .ingest import PredicateTemplate, parse_comparison, parse_domain_knowledge
from .model import (
    Algebraic,
    Controller,
    DecisionTree,
    Inner,
    Leaf,
    Node,
    NodeView,
    Predicate,
    display_predicate,
)

#: tie-break order between predicate domains
_DOMAIN_RANK = {"axis": 0, "categorical": 1, "linear": 2, "template": 3}

LEAF_SINGLE = "single"
LEAF_COMMON_SET = "common-set"


@dataclass(frozen=True)
class BuildConfig:
    measure: ImpurityMeasure = ImpurityMeasure.ENTROPY
    determinizer: Determinizer = Determinizer()
    priorities: dict = field(default_factory=dict)
    tolerance: float = 0.0
    leaf_mode: str | None = None
    max_depth: int | None = None
    templates: tuple[PredicateTemplate, ...] = ()
    max_linear_thresholds: int = pg.MAX_LINEAR_THRESHOLDS
    max_enumeration: int = pg.MAX_ENUMERATION

    def __post_init__(self):
        for domain, p in self.priorities.items():
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"priority of {domain!r} must be in [0, 1], got {p}")
        if not any(p > 0 for p in self.effective_priorities().values()):
            raise ValueError("at least one predicate domain needs priority > 0")
        if self.tolerance < 0:
            raise ValueError("grouping tolerance must be >= 0 (or inf)")
        if self.leaf_mode not in (None, LEAF_SINGLE, LEAF_COMMON_SET):
            raise ValueError(f"unknown leaf mode {self.leaf_mode!r}")

    def priority_of(self, domain_id: str) -> float:
        if domain_id.startswith("template:"):
            if domain_id in self.priorities:
                return float(self.priorities[domain_id])
            return float(self.priorities.get("template", 1.0))
        return float(self.priorities.get(domain_id, 1.0))

    def effective_priorities(self) -> dict[str, float]:
        domains = ["axis", "categorical", "linear"]
        domains += [f"template:{t.name}" for t in self.templates]
        return {d: self.priority_of(d) for d in domains}

    @property
    def effective_leaf_mode(self) -> str:
        if self.leaf_mode is not None:
            return self.leaf_mode
        if self.determinizer.mode is DetMode.SAFE_EARLY_STOP:
            return LEAF_SINGLE
        return LEAF_COMMON_SET

    def to_dict(self) -> dict:
        out: dict = {
            "impurity": self.measure.value,
            "determinize": self.determinizer.mode.value,
            "priorities": dict(sorted(self.priorities.items())),
            "tolerance": "inf" if math.isinf(self.tolerance) else self.tolerance,
            "leaf_mode": self.leaf_mode,
            "max_depth": self.max_depth,
            "domain_knowledge": [t.source for t in self.templates],
            "max_linear_thresholds": self.max_linear_thresholds,
            "max_enumeration": self.max_enumeration,
        }
        if self.determinizer.seed is not None:
            out["seed"] = self.determinizer.seed
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "BuildConfig":
        templates = tuple(parse_domain_knowledge("\n".join(doc.get("domain_knowledge", []))))
        tolerance = doc.get("tolerance", 0.0)
        if tolerance == "inf":
            tolerance = math.inf
        return cls(
            measure=ImpurityMeasure.parse(doc.get("impurity", "entropy")),
            determinizer=Determinizer.parse(doc.get("determinize", "none"),
                                            doc.get("seed")),
            priorities={k: float(v) for k, v in doc.get("priorities", {}).items()},
            tolerance=float(tolerance),
            leaf_mode=doc.get("leaf_mode"),
            max_depth=doc.get("max_depth"),
            templates=templates,
            max_linear_thresholds=int(doc.get("max_linear_thresholds",
                                              pg.MAX_LINEAR_THRESHOLDS)),
            max_enumeration=int(doc.get("max_enumeration", pg.MAX_ENUMERATION)),
        )

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def label(self) -> str:
        parts = [self.measure.value, self.determinizer.mode.value]
        if self.priorities:
            parts.append(",".join(f"{k}={v:g}" for k, v in sorted(self.priorities.items())))
        if self.tolerance:
            parts.append(f"tol={'inf' if math.isinf(self.tolerance) else f'{self.tolerance:g}'}")
        if self.templates:
            parts.append(f"{len(self.templates)} templates")
        return "/".join(parts)


# --------------------------------------------------------------------------
# predicate selection


def _referenced_variables(pred: Predicate, variables) -> int:
    if isinstance(pred, Algebraic):
        names = ex.free_names(pred.lhs) | ex.free_names(pred.rhs)
        known = {v.name for v in variables} | {f"x_{i}" for i in range(len(variables))}
        return len(names & known)
    if hasattr(pred, "coefficients"):
        return sum(1 for c in pred.coefficients if c != 0.0)
    return 1


def _gather(view: NodeView, config: BuildConfig) -> list[tuple[Predicate, str]]:
    """All candidates with their domain ids, in a deterministic order."""
    controller = view.controller
    out: list[tuple[Predicate, str]] = []
    for var in controller.numeric_indices():
        for pred in pg.axis_aligned_candidates(view, var):
            out.append((pred, "axis"))
    for var in controller.categorical_indices():
        try:
            pred = pg.categorical_grouping(view, var, config.measure, config.tolerance)
        except DegenerateSplit:
            continue
        out.append((pred, "categorical"))
    for pred in pg.linear_candidates(view, config.max_linear_thresholds):
        out.append((pred, "linear"))
    for template in config.templates:
        for pred in pg.instantiate_templates([template], view, config.measure,
                                             config.max_enumeration):
            out.append((pred, f"template:{template.name}"))
    deduped = pg.dedupe([p for p, _ in out], controller.variables)
    kept_ids = {id(p) for p in deduped}
    return [(p, d) for p, d in out if id(p) in kept_ids]


def _rank(scored: list[tuple[float, Predicate, str]], variables) -> tuple[Predicate, float]:
    best = min(s for s, _, _ in scored)
    ties = [(pred, domain, score) for score, pred, domain in scored
            if score <= best + IMPURITY_ATOL]

    def key(entry):
        pred, domain, _ = entry
        base = domain.split(":", 1)[0]
        return (_DOMAIN_RANK[base], _referenced_variables(pred, variables),
                display_predicate(pred, variables))

    pred, _, score = min(ties, key=key)
    return pred, score


def select_predicate(view: NodeView, config: BuildConfig) -> tuple[Predicate, float]:
    """Pick the candidate minimizing split impurity divided by the priority
    of its domain; priority-0 domains are consulted (at raw impurity) only
    once every positive-priority candidate has failed to split the view."""
    candidates = _gather(view, config)
    positive: list[tuple[float, Predicate, str]] = []
    fallback: list[tuple[float, Predicate, str]] = []
    for pred, domain in candidates:
        priority = config.priority_of(domain)
        impurity = split_impurity(pred, view, config.measure)
        if priority > 0:
            positive.append((impurity / priority, pred, domain))
        else:
            fallback.append((impurity, pred, domain))

    finite = [entry for entry in positive if math.isfinite(entry[0])]
    if finite:
        return _rank(finite, view.controller.variables)
    finite = [entry for entry in fallback if math.isfinite(entry[0])]
    if finite:
        return _rank(finite, view.controller.variables)
    raise NoValidPredicate(f"no candidate splits this view of {len(view)} state(s)")


# --------------------------------------------------------------------------
# session


@dataclass
class VarReport:
    name: str
    minimum: float
    maximum: float
    step: float


@dataclass
class CandidateReport:
    display: str
    impurity: float
    domain: str


@dataclass
class NodeReport:
    node_id: int
    size: int
    numeric: list[VarReport]
    categorical: dict[str, dict[str, int]]
    label_histogram: list[tuple[tuple[str, ...], int]]
    action_histogram: dict[str, int]
    candidates: list[CandidateReport]
    template_candidates: list[CandidateReport]


@dataclass
class EvalReport:
    display: str
    impurity: float
    branch_sizes: tuple[int, ...]
    branch_common: tuple[tuple[str, ...], ...]


class BuildSession:
    """Incremental construction state over one controller.

    Nodes are arena entries; open nodes hold their view and no Node yet.
    The frontier advances depth-first with the false branch first, so a
    fully automatic run visits nodes in the same order as `build_tree`.
    """

    def __init__(self, controller: Controller, config: BuildConfig):
        if len(controller) == 0:
            raise EmptyController("cannot build a tree for an empty controller")
        if config.determinizer.mode is not DetMode.NONE:
            if controller.objective not in (None, "safety"):
                warnings.warn(
                    f"determinizing a controller with objective "
                    f"{controller.objective!r}: guarantees beyond safety may "
                    f"not be preserved", stacklevel=3)
        self.source = controller
        if config.determinizer.is_preprocess:
            controller = determinize_preprocess(controller, config.determinizer)
        self.controller = controller
        self.config = config
        self._nodes: dict[int, Node | None] = {}
        self._views: dict[int, NodeView] = {}
        self._depths: dict[int, int] = {}
        self._next_id = 0
        root = self._open(NodeView.full(controller), depth=0)
        self.root = root
        self.frontier: list[int] = []
        self.cursor: int | None = root

    # -- bookkeeping ----------------------------------------------------

    def _open(self, view: NodeView, depth: int) -> int:
        nid = self._next_id
        self._next_id += 1
        self._nodes[nid] = None
        self._views[nid] = view
        self._depths[nid] = depth
        return nid

    def is_open(self, nid: int) -> bool:
        return self._nodes.get(nid, False) is None

    def view_of(self, nid: int) -> NodeView:
        if nid not in self._views:
            raise UnknownNode(f"no node {nid}")
        return self._views[nid]

    def _advance_cursor(self):
        while self.frontier:
            nid = self.frontier.pop()
            if self.is_open(nid):
                self.cursor = nid
                return
        self.cursor = None

    # -- stopping rule ----------------------------------------------------

    def _leaf_label(self, view: NodeView) -> frozenset[str] | None:
        """Nonempty action set when the view satisfies the stopping rule."""
        if self.config.determinizer.mode is DetMode.SAFE_EARLY_STOP:
            common = common_actions(view)
            if not common:
                return None
            if self.config.effective_leaf_mode == LEAF_SINGLE:
                counts = self.controller.global_action_counts
                return frozenset({min(common, key=lambda a: (-counts[a], a))})
            return common
        hist = view.label_histogram
        if len(hist) == 1:
            return next(iter(hist))
        return None

    def _union_label(self, view: NodeView) -> frozenset[str]:
        out: set[str] = set()
        for b in view.label_histogram:
            out |= b
        return frozenset(out)

    # -- operations ------------------------------------------------------

    def apply_predicate(self, predicate: Predicate) -> int:
        """Split the cursor node; children satisfying the stopping rule are
        finalized immediately, the rest are opened depth-first."""
        if self.cursor is None:
            raise SessionClosed("no open node to split")
        nid = self.cursor
        view = self._views[nid]
        parts = view.partition(predicate)
        if any(len(p) == 0 for p in parts):
            sizes = tuple(len(p) for p in parts)
            raise InvalidPredicate(
                f"{display_predicate(predicate, self.controller.variables)} "
                f"does not split the node (branch sizes {sizes})")
        child_ids = []
        opened = []
        for part in parts:
            child_view = NodeView(self.controller, part)
            cid = self._open(child_view, self._depths[nid] + 1)
            label = self._leaf_label(child_view)
            if label is not None:
                self._nodes[cid] = Leaf(cid, label)
            else:
                opened.append(cid)
            child_ids.append(cid)
        self._nodes[nid] = Inner(nid, predicate, tuple(child_ids))
        for cid in reversed(opened):
            self.frontier.append(cid)
        self._advance_cursor()
        return nid

    def evaluate_text(self, expr_text: str) -> EvalReport:
        """Score a free-text `term CMP term` predicate on the cursor node
        without mutating the session.  Branch sizes and common actions are
        reported true-branch first, matching the rendering convention."""
        if self.cursor is None:
            raise SessionClosed("no open node")
        lhs, cmp, rhs = parse_comparison(expr_text)
        pred = Algebraic(lhs, cmp, rhs,
                         provenance=f"{ex.to_text(lhs)} {cmp} {ex.to_text(rhs)}")
        view = self._views[self.cursor]
        parts = view.partition(pred)[::-1]  # true branch first
        impurity = split_impurity(pred, view, self.config.measure)
        commons = []
        for part in parts:
            if len(part) == 0:
                commons.append(())
            else:
                commons.append(tuple(sorted(common_actions(NodeView(self.controller, part)))))
        return EvalReport(pred.provenance, impurity,
                          tuple(len(p) for p in parts), tuple(commons))

    def node_stats(self, top_k: int = 10) -> NodeReport:
        """Per-variable ranges, histograms and ranked candidates for the
        cursor node."""
        if self.cursor is None:
            raise SessionClosed("no open node")
        view = self._views[self.cursor]
        variables = self.controller.variables
        numeric = []
        for i in self.controller.numeric_indices():
            distinct = np.unique(view.column(i))
            step = float(np.diff(distinct).min()) if len(distinct) > 1 else 0.0
            numeric.append(VarReport(variables[i].name, float(distinct[0]),
                                     float(distinct[-1]), step))
        categorical = {}
        for i in self.controller.categorical_indices():
            hist: dict[str, int] = {}
            for tok in view.tokens(i):
                hist[tok] = hist.get(tok, 0) + 1
            categorical[variables[i].name] = dict(sorted(hist.items()))

        auto: list[CandidateReport] = []
        template: list[CandidateReport] = []
        for pred, domain in _gather(view, self.config):
            imp = split_impurity(pred, view, self.config.measure)
            report = CandidateReport(display_predicate(pred, variables), imp, domain)
            (template if domain.startswith("template:") else auto).append(report)
        auto.sort(key=lambda r: (r.impurity, r.display))
        template.sort(key=lambda r: (r.impurity, r.display))

        labels = sorted(((tuple(sorted(b)), n) for b, n in view.label_histogram.items()))
        return NodeReport(self.cursor, len(view), numeric, categorical,
                          labels, dict(sorted(view.action_histogram.items())),
                          auto[:top_k], template)

    def autocomplete(self, config: BuildConfig | None = None) -> None:
        """Finish every open node automatically under `config` (defaults to
        the session config)."""
        config = config or self.config
        stored = self.config
        self.config = config
        try:
            while self.cursor is not None:
                view = self._views[self.cursor]
                label = self._leaf_label(view)
                if label is not None:
                    self._nodes[self.cursor] = Leaf(self.cursor, label)
                    self._advance_cursor()
                    continue
                if (config.max_depth is not None
                        and self._depths[self.cursor] >= config.max_depth):
                    self._nodes[self.cursor] = Leaf(
                        self.cursor, self._union_label(view), inexact=True)
                    self._advance_cursor()
                    continue
                try:
                    pred, _ = select_predicate(view, config)
                except NoValidPredicate:
                    self._nodes[self.cursor] = Leaf(
                        self.cursor, self._union_label(view), inexact=True)
                    self._advance_cursor()
                    continue
                self.apply_predicate(pred)
        finally:
            self.config = stored

    def goto(self, node_id: int) -> None:
        """Discard the subtree rooted at node_id and reopen it with its
        original view."""
        if node_id not in self._views:
            raise UnknownNode(f"no node {node_id}")
        discarded: set[int] = set()
        node = self._nodes.get(node_id)
        stack = [c for c in node.children] if isinstance(node, Inner) else []
        while stack:
            nid = stack.pop()
            discarded.add(nid)
            child = self._nodes.get(nid)
            if isinstance(child, Inner):
                stack.extend(child.children)
        for nid in discarded:
            self._nodes.pop(nid, None)
            self._views.pop(nid, None)
            self._depths.pop(nid, None)
        self._nodes[node_id] = None
        old_cursor = self.cursor
        self.frontier = [nid for nid in self.frontier
                         if nid not in discarded and nid != node_id]
        if old_cursor is not None and old_cursor not in discarded and old_cursor != node_id:
            self.frontier.append(old_cursor)
        self.cursor = node_id

    def open_nodes(self) -> list[int]:
        return sorted(nid for nid, node in self._nodes.items() if node is None)

    def tree(self, allow_open: bool = False) -> DecisionTree:
        """Finalized tree; with allow_open=True, open nodes render as
        union-labelled leaves flagged inexact (progress snapshots)."""
        nodes: dict[int, Node] = {}
        for nid, node in self._nodes.items():
            if node is None:
                if not allow_open:
                    raise SessionClosed(
                        f"session still has open nodes: {self.open_nodes()}")
                node = Leaf(nid, self._union_label(self._views[nid]), inexact=True)
            nodes[nid] = node
        return DecisionTree(nodes, self.root, self.controller.variables,
                            self.controller.label_table)


def build_tree(controller: Controller, config: BuildConfig | None = None) -> DecisionTree:
    """Fully automatic construction (a session autocompleted in one go)."""
    session = BuildSession(controller, config or BuildConfig())
    session.autocomplete()
    return session.tree()


# --------------------------------------------------------------------------
# subtree retraining


def _path_to(tree: DecisionTree, node_id: int) -> list[tuple[int, int]]:
    """(node id, branch taken) pairs from the root down to node_id."""
    if node_id not in tree.nodes:
        raise UnknownNode(f"no node {node_id}")
    path: list[tuple[int, int]] = []

    def walk(nid: int) -> bool:
        if nid == node_id:
            return True
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            return False
        for branch, child in enumerate(node.children):
            path.append((nid, branch))
            if walk(child):
                return True
            path.pop()
        return False

    if not walk(tree.root):
        raise UnknownNode(f"node {node_id} unreachable from the root")
    return path


def retrain_subtree(tree: DecisionTree, node_id: int, controller: Controller,
                    config: BuildConfig) -> DecisionTree:
    """Rebuild the subtree rooted at node_id under a new config and splice
    it in; every node outside that subtree is carried over unchanged."""
    path = _path_to(tree, node_id)

    indices = NodeView.full(controller).indices
    for nid, branch in path:
        node = tree.nodes[nid]
        assert isinstance(node, Inner)
        parts = NodeView(controller, indices).partition(node.predicate)
        indices = parts[branch]
        if len(indices) == 0:
            raise EmptyController(
                f"no state of this controller reaches node {node_id}")

    region = Controller(controller.variables,
                        {s: controller.rows[s]
                         for s in (controller.states[int(i)] for i in indices)},
                        objective=controller.objective)
    subtree = build_tree(region, config)
    if node_id == tree.root:
        return subtree

    # drop the old subtree, then splice the new one in with fresh ids
    discard = {node_id}
    stack = [node_id]
    while stack:
        node = tree.nodes[stack.pop()]
        if isinstance(node, Inner):
            for c in node.children:
                discard.add(c)
                stack.append(c)
    nodes: dict[int, Node] = {nid: n for nid, n in tree.nodes.items()
                              if nid not in discard}
    base = max(nodes) + 1
    remap = {old: base + k for k, old in enumerate(sorted(subtree.nodes))}
    for old, node in subtree.nodes.items():
        nid = remap[old]
        if isinstance(node, Leaf):
            nodes[nid] = Leaf(nid, node.actions, node.inexact)
        else:
            nodes[nid] = Inner(nid, node.predicate,
                               tuple(remap[c] for c in node.children))
    parent_id, branch = path[-1]
    parent = nodes[parent_id]
    assert isinstance(parent, Inner)
    children = list(parent.children)
    children[branch] = remap[subtree.root]
    nodes[parent_id] = Inner(parent_id, parent.predicate, tuple(children))
    return DecisionTree(nodes, tree.root, tree.variables, tree.label_table)
