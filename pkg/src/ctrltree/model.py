"""Core domain types: controllers, predicates, decision trees, node views.

A controller is a finite map from state vectors to nonempty action sets.
Trees built from a controller either represent it exactly or, when
determinized, map every state to a nonempty subset of its allowed actions.
All types here are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import expressions as ex
from .errors import (
    StateNotFound,
    UnknownCategoricalToken,
    UnknownCategoricalValue,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: relative tolerance of the `=` comparator on numeric values
EQ_REL_TOL = 1e-9

StateVector = tuple
ActionSet = frozenset


@dataclass(frozen=True)
class VariableMeta:
    """One state variable: a name, a kind, and (categorical only) its
    ordered dictionary of value tokens."""

    name: str
    kind: str = NUMERIC
    dictionary: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == NUMERIC and self.dictionary is not None:
            raise ValueError(f"numeric variable {self.name!r} cannot carry a dictionary")
        if self.dictionary is not None:
            object.__setattr__(self, "dictionary", tuple(self.dictionary))
            if len(self.dictionary) == 0:
                raise ValueError(f"empty dictionary for {self.name!r}")
            if len(set(self.dictionary)) != len(self.dictionary):
                raise ValueError(f"duplicate tokens in dictionary of {self.name!r}")


def _normalize_state(state: Sequence, variables: Sequence[VariableMeta]) -> StateVector:
    if len(state) != len(variables):
        raise ValueError(f"state has {len(state)} coordinates, expected {len(variables)}")
    out = []
    for value, var in zip(state, variables):
        if var.kind == NUMERIC:
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite value for variable {var.name!r}")
            out.append(value)
        else:
            out.append(str(value))
    return tuple(out)


class Controller:
    """Finite map from state vectors to nonempty action sets.

    Action labels are interned into a sorted label table; per-state sets
    are stored both as frozensets of labels (API) and as dense integer-id
    structures (histogram hot paths).  Categorical variables without a
    declared dictionary get one built from the observed tokens, sorted, so
    parsing the same rows in any order yields an identical controller.
    """

    def __init__(self,
                 variables: Sequence[VariableMeta],
                 rows: Mapping[Sequence, Iterable[str]],
                 permissive: bool | None = None,
                 objective: str | None = None):
        variables = tuple(variables)
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

        normalized: dict[StateVector, frozenset[str]] = {}
        observed: dict[int, set[str]] = {
            i: set() for i, v in enumerate(variables) if v.kind == CATEGORICAL
        }
        for state, actions in rows.items():
            key = _normalize_state(tuple(state), variables)
            actions = frozenset(str(a) for a in actions)
            if not actions:
                raise ValueError(f"empty action set for state {key}")
            for i in observed:
                observed[i].add(key[i])
            normalized[key] = actions

        resolved = []
        for i, var in enumerate(variables):
            if var.kind == CATEGORICAL:
                if var.dictionary is None:
                    tokens = tuple(sorted(observed.get(i, set())))
                    if not tokens:
                        raise ValueError(
                            f"cannot infer a dictionary for {var.name!r}: no rows")
                    var = VariableMeta(var.name, CATEGORICAL, tokens)
                else:
                    unknown = observed.get(i, set()) - set(var.dictionary)
                    if unknown:
                        raise UnknownCategoricalToken(
                            f"value(s) {sorted(unknown)} of {var.name!r} "
                            f"not in the declared dictionary")
            resolved.append(var)

        if permissive is None:
            permissive = any(len(a) > 1 for a in normalized.values())
        elif not permissive:
            for state, actions in normalized.items():
                if len(actions) > 1:
                    raise ValueError(
                        f"controller marked deterministic but state {state} "
                        f"allows {len(actions)} actions")

        self.variables: tuple[VariableMeta, ...] = tuple(resolved)
        self.rows: Mapping[StateVector, frozenset[str]] = MappingProxyType(normalized)
        self.permissive = bool(permissive)
        self.objective = objective

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Controller):
            return NotImplemented
        return (self.variables == other.variables
                and dict(self.rows) == dict(other.rows)
                and self.permissive == other.permissive)

    def __repr__(self) -> str:
        return (f"Controller({len(self.rows)} states, {len(self.variables)} vars, "
                f"{'permissive' if self.permissive else 'deterministic'})")

    def lookup(self, state: Sequence) -> frozenset[str]:
        key = _normalize_state(tuple(state), self.variables)
        try:
            return self.rows[key]
        except KeyError:
            raise StateNotFound(f"state {key} not in controller") from None

    # -- interned / vectorized representations (lazy) -----------------------

    @cached_property
    def states(self) -> tuple[StateVector, ...]:
        """All state vectors in canonical (sorted) order."""
        return tuple(sorted(self.rows))

    @cached_property
    def label_table(self) -> tuple[str, ...]:
        labels: set[str] = set()
        for actions in self.rows.values():
            labels |= actions
        return tuple(sorted(labels))

    @cached_property
    def label_ids(self) -> Mapping[str, int]:
        return MappingProxyType({a: i for i, a in enumerate(self.label_table)})

    @cached_property
    def matrix(self) -> np.ndarray:
        """(n_states, n_vars) float matrix; categorical values as dictionary codes."""
        n, m = len(self.states), len(self.variables)
        out = np.empty((n, m), dtype=np.float64)
        for j, var in enumerate(self.variables):
            if var.kind == NUMERIC:
                out[:, j] = [s[j] for s in self.states]
            else:
                code = {tok: k for k, tok in enumerate(var.dictionary)}
                out[:, j] = [code[s[j]] for s in self.states]
        return out

    @cached_property
    def set_table(self) -> tuple[frozenset[str], ...]:
        """Distinct action sets, in first-appearance order over sorted states."""
        seen: dict[frozenset[str], int] = {}
        for s in self.states:
            seen.setdefault(self.rows[s], len(seen))
        return tuple(seen)

    @cached_property
    def set_ids(self) -> np.ndarray:
        index = {b: i for i, b in enumerate(self.set_table)}
        return np.array([index[self.rows[s]] for s in self.states], dtype=np.int64)

    @cached_property
    def membership(self) -> np.ndarray:
        """(n_states, n_actions) boolean action-membership matrix."""
        out = np.zeros((len(self.states), len(self.label_table)), dtype=bool)
        ids = self.label_ids
        for i, s in enumerate(self.states):
            for a in self.rows[s]:
                out[i, ids[a]] = True
        return out

    @cached_property
    def global_action_counts(self) -> Mapping[str, int]:
        """p_a over the whole controller (used by MaxFreq and leaf labelling)."""
        counts = self.membership.sum(axis=0)
        return MappingProxyType({a: int(counts[i]) for i, a in enumerate(self.label_table)})

    def numeric_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == NUMERIC]

    def categorical_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == CATEGORICAL]


# --------------------------------------------------------------------------
# predicates


def _rel_eq(a, b):
    return np.abs(a - b) <= EQ_REL_TOL * np.maximum(np.abs(a), np.abs(b))


def _compare(lhs, cmp: str, rhs):
    if cmp == "<=":
        return lhs <= rhs
    if cmp == ">=":
        return lhs >= rhs
    if cmp == "<":
        return lhs < rhs
    if cmp == ">":
        return lhs > rhs
    if cmp == "=":
        return _rel_eq(lhs, rhs)
    raise ValueError(f"unknown comparator {cmp!r}")


@dataclass(frozen=True)
class AxisAligned:
    """s_var <= threshold"""
    var: int
    threshold: float

    arity = 2
    domain = "axis"


@dataclass(frozen=True)
class Linear:
    """sum(coefficients[i] * s_i) <= threshold; coefficients cover all
    variables positionally, zero on categorical positions."""
    coefficients: tuple[float, ...]
    threshold: float

    arity = 2
    domain = "linear"

    def __post_init__(self):
        if not any(c != 0.0 for c in self.coefficients):
            raise ValueError("linear predicate needs at least one nonzero coefficient")


@dataclass(frozen=True)
class CategoricalGrouping:
    """Multiway split on a categorical variable; branch k is taken when the
    value lies in groups[k]."""
    var: int
    groups: tuple[tuple[str, ...], ...]

    domain = "categorical"

    def __post_init__(self):
        if len(self.groups) < 2:
            raise ValueError("grouping needs at least two groups")
        seen: set[str] = set()
        for g in self.groups:
            if not g:
                raise ValueError("empty value group")
            for tok in g:
                if tok in seen:
                    raise ValueError(f"token {tok!r} appears in two groups")
                seen.add(tok)

    @property
    def arity(self) -> int:
        return len(self.groups)

    def group_of(self, token: str) -> int:
        for k, g in enumerate(self.groups):
            if token in g:
                return k
        raise UnknownCategoricalValue(f"value {token!r} not covered by any group")


@dataclass(frozen=True)
class Algebraic:
    """lhs CMP rhs over the numeric state variables, from a user template
    or a free-text session predicate."""
    lhs: ex.Expression
    comparator: str
    rhs: ex.Expression
    provenance: str = ""

    arity = 2
    domain = "template"

    def __post_init__(self):
        if self.comparator not in ("<=", ">=", "<", ">", "="):
            raise ValueError(f"unknown comparator {self.comparator!r}")


Predicate = Union[AxisAligned, Linear, CategoricalGrouping, Algebraic]


def _format_threshold(x: float) -> str:
    return ex._format_number(float(x))


def display_predicate(pred: Predicate, variables: Sequence[VariableMeta]) -> str:
    if isinstance(pred, AxisAligned):
        return f"{variables[pred.var].name} <= {_format_threshold(pred.threshold)}"
    if isinstance(pred, Linear):
        terms = []
        for i, c in enumerate(pred.coefficients):
            if c == 0.0:
                continue
            name = variables[i].name
            if not terms:
                if c == 1.0:
                    terms.append(name)
                elif c == -1.0:
                    terms.append(f"-{name}")
                else:
                    terms.append(f"{_format_threshold(c)}*{name}")
            else:
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                terms.append(f"{sign} {name}" if mag == 1.0
                             else f"{sign} {_format_threshold(mag)}*{name}")
        return f"{' '.join(terms)} <= {_format_threshold(pred.threshold)}"
    if isinstance(pred, CategoricalGrouping):
        groups = " / ".join("{" + ",".join(g) + "}" for g in pred.groups)
        return f"{variables[pred.var].name} in {groups}"
    if pred.provenance:
        return pred.provenance
    return f"{ex.to_text(pred.lhs)} {pred.comparator} {ex.to_text(pred.rhs)}"


def algebraic_env(state: StateVector, variables: Sequence[VariableMeta]) -> dict:
    """Name environment for one state: positional x_i aliases first, real
    variable names take precedence.  Categorical coordinates are omitted; an
    expression that touches one fails with an unknown-symbol error."""
    env: dict = {}
    for i, var in enumerate(variables):
        if var.kind == NUMERIC:
            env[f"x_{i}"] = state[i]
    for i, var in enumerate(variables):
        if var.kind == NUMERIC:
            env[var.name] = state[i]
    return env


def _algebraic_env_batch(matrix: np.ndarray, variables: Sequence[VariableMeta]) -> dict:
    env: dict = {}
    for i, var in enumerate(variables):
        if var.kind == NUMERIC:
            env[f"x_{i}"] = matrix[:, i]
    for i, var in enumerate(variables):
        if var.kind == NUMERIC:
            env[var.name] = matrix[:, i]
    return env


def eval_predicate_on_state(pred: Predicate, state: StateVector,
                            variables: Sequence[VariableMeta]) -> int:
    """Branch index for one state: binary predicates return 1 when the
    comparison holds (child 0 is the false branch), groupings return the
    index of the group containing the value."""
    if isinstance(pred, AxisAligned):
        return int(state[pred.var] <= pred.threshold)
    if isinstance(pred, Linear):
        total = 0.0
        for c, v in zip(pred.coefficients, state):
            if c != 0.0:
                total += c * v
        return int(total <= pred.threshold)
    if isinstance(pred, CategoricalGrouping):
        return pred.group_of(state[pred.var])
    env = algebraic_env(state, variables)
    lhs = ex.evaluate(pred.lhs, env)
    rhs = ex.evaluate(pred.rhs, env)
    return int(bool(_compare(lhs, pred.comparator, rhs)))


def eval_predicate_batch(pred: Predicate, matrix: np.ndarray,
                         variables: Sequence[VariableMeta],
                         tokens: Sequence[Sequence[str]] | None = None) -> np.ndarray:
    """Vectorized branch indices over a state matrix (categorical as codes)."""
    if isinstance(pred, AxisAligned):
        return (matrix[:, pred.var] <= pred.threshold).astype(np.int64)
    if isinstance(pred, Linear):
        coeffs = np.asarray(pred.coefficients)
        return (matrix @ coeffs <= pred.threshold).astype(np.int64)
    if isinstance(pred, CategoricalGrouping):
        dictionary = variables[pred.var].dictionary or ()
        table = np.full(len(dictionary), -1, dtype=np.int64)
        for k, g in enumerate(pred.groups):
            for tok in g:
                if tok in dictionary:
                    table[dictionary.index(tok)] = k
        codes = matrix[:, pred.var].astype(np.int64)
        branches = table[codes]
        if np.any(branches < 0):
            bad = int(codes[np.argmax(branches < 0)])
            raise UnknownCategoricalValue(
                f"value {dictionary[bad]!r} not covered by any group")
        return branches
    env = _algebraic_env_batch(matrix, variables)
    lhs = ex.evaluate(pred.lhs, env)
    rhs = ex.evaluate(pred.rhs, env)
    result = _compare(lhs, pred.comparator, rhs)
    return np.broadcast_to(result, (matrix.shape[0],)).astype(np.int64)


# --------------------------------------------------------------------------
# decision trees


@dataclass(frozen=True)
class Leaf:
    id: int
    actions: frozenset[str]
    inexact: bool = False

    def __post_init__(self):
        if not self.actions:
            raise ValueError("leaf with empty action set")


@dataclass(frozen=True)
class Inner:
    id: int
    predicate: Predicate
    children: tuple[int, ...]

    def __post_init__(self):
        arity = self.predicate.arity
        if len(self.children) != arity:
            raise ValueError(f"inner node has {len(self.children)} children, "
                             f"predicate arity is {arity}")


Node = Union[Leaf, Inner]


@dataclass
class Stats:
    total_nodes: int
    inner_nodes: int
    leaves: int
    depth: int


class DecisionTree:
    """Arena-backed tree; inner nodes carry predicates, leaves carry
    nonempty action sets.  Structural equality ignores arena ids."""

    def __init__(self, nodes: Mapping[int, Node], root: int,
                 variables: Sequence[VariableMeta],
                 label_table: Sequence[str] = ()):
        self.nodes: Mapping[int, Node] = MappingProxyType(dict(nodes))
        self.root = root
        self.variables = tuple(variables)
        self.label_table = tuple(label_table) if label_table else self._labels_from_leaves()
        self._validate()

    def _labels_from_leaves(self) -> tuple[str, ...]:
        labels: set[str] = set()
        for node in self.nodes.values():
            if isinstance(node, Leaf):
                labels |= node.actions
        return tuple(sorted(labels))

    def _validate(self):
        if self.root not in self.nodes:
            raise ValueError("root id not in arena")
        seen: set[int] = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise ValueError(f"node {nid} reachable twice; not a tree")
            seen.add(nid)
            node = self.nodes[nid]
            if isinstance(node, Inner):
                for c in node.children:
                    if c not in self.nodes:
                        raise ValueError(f"dangling child id {c}")
                    stack.append(c)
            if node.id != nid:
                raise ValueError(f"node {nid} stored under wrong id")
        if seen != set(self.nodes):
            raise ValueError("arena contains unreachable nodes")
        for node in self.nodes.values():
            if isinstance(node, Inner) and isinstance(node.predicate, CategoricalGrouping):
                var = self.variables[node.predicate.var]
                covered = {tok for g in node.predicate.groups for tok in g}
                if var.dictionary and not set(var.dictionary) <= covered:
                    raise ValueError(
                        f"grouping on {var.name!r} does not cover its dictionary")

    def evaluate(self, state: Sequence) -> frozenset[str]:
        """Action set of the unique leaf this state reaches.

        On states outside the source controller the walk is still defined
        mechanically, but the result carries no safety guarantee: these
        trees represent lookup tables, they do not generalize.
        """
        state = _normalize_state(tuple(state), self.variables)
        node = self.nodes[self.root]
        while isinstance(node, Inner):
            branch = eval_predicate_on_state(node.predicate, state, self.variables)
            node = self.nodes[node.children[branch]]
        return node.actions

    def evaluate_batch(self, matrix: np.ndarray) -> list[frozenset[str]]:
        out: list[frozenset[str]] = [frozenset()] * matrix.shape[0]
        idx = np.arange(matrix.shape[0])
        stack = [(self.root, idx)]
        while stack:
            nid, rows = stack.pop()
            node = self.nodes[nid]
            if isinstance(node, Leaf):
                for r in rows:
                    out[int(r)] = node.actions
                continue
            branches = eval_predicate_batch(node.predicate, matrix[rows],
                                            self.variables)
            for k, child in enumerate(node.children):
                sub = rows[branches == k]
                if len(sub):
                    stack.append((child, sub))
        return out

    @property
    def is_exact(self) -> bool:
        return not any(isinstance(n, Leaf) and n.inexact for n in self.nodes.values())

    def _structure(self, nid: int):
        node = self.nodes[nid]
        if isinstance(node, Leaf):
            return ("leaf", node.actions, node.inexact)
        return ("inner", node.predicate,
                tuple(self._structure(c) for c in node.children))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return (self.variables == other.variables
                and self._structure(self.root) == other._structure(other.root))

    def __repr__(self) -> str:
        s = tree_stats(self)
        return f"DecisionTree({s.total_nodes} nodes, depth {s.depth})"


def evaluate_tree(tree: DecisionTree, state: Sequence) -> frozenset[str]:
    return tree.evaluate(state)


def lookup(controller: Controller, state: Sequence) -> frozenset[str]:
    return controller.lookup(state)


def tree_stats(tree: DecisionTree) -> Stats:
    inner = leaves = 0
    max_depth = 0
    stack = [(tree.root, 0)]
    while stack:
        nid, depth = stack.pop()
        node = tree.nodes[nid]
        max_depth = max(max_depth, depth)
        if isinstance(node, Leaf):
            leaves += 1
        else:
            inner += 1
            stack.extend((c, depth + 1) for c in node.children)
    return Stats(inner + leaves, inner, leaves, max_depth)


# --------------------------------------------------------------------------
# node views


class NodeView:
    """Read-only projection of a controller onto a subset of its states,
    with cached label (n_B) and action (p_a) histograms."""

    def __init__(self, controller: Controller, indices: np.ndarray):
        self.controller = controller
        self.indices = np.asarray(indices, dtype=np.int64)
        if len(self.indices) == 0:
            raise ValueError("empty node view")

    @classmethod
    def full(cls, controller: Controller) -> "NodeView":
        return cls(controller, np.arange(len(controller.states), dtype=np.int64))

    def __len__(self) -> int:
        return len(self.indices)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.controller.matrix[self.indices]

    @cached_property
    def set_id_counts(self) -> np.ndarray:
        return np.bincount(self.controller.set_ids[self.indices],
                           minlength=len(self.controller.set_table))

    @cached_property
    def action_counts(self) -> np.ndarray:
        return self.controller.membership[self.indices].sum(axis=0)

    @cached_property
    def label_histogram(self) -> dict[frozenset[str], int]:
        """n_B: occurrences of each distinct action set in the view."""
        counts = self.set_id_counts
        return {b: int(counts[i])
                for i, b in enumerate(self.controller.set_table) if counts[i]}

    @cached_property
    def action_histogram(self) -> dict[str, int]:
        """p_a: number of view states whose set contains each action."""
        counts = self.action_counts
        return {a: int(counts[i])
                for i, a in enumerate(self.controller.label_table) if counts[i]}

    def states(self) -> list[StateVector]:
        all_states = self.controller.states
        return [all_states[int(i)] for i in self.indices]

    def column(self, var: int) -> np.ndarray:
        return self.controller.matrix[self.indices, var]

    def tokens(self, var: int) -> list[str]:
        dictionary = self.controller.variables[var].dictionary or ()
        return [dictionary[int(c)] for c in self.column(var)]

    def action_sets(self) -> list[frozenset[str]]:
        table = self.controller.set_table
        ids = self.controller.set_ids[self.indices]
        return [table[int(i)] for i in ids]

    def partition(self, pred: Predicate) -> list[np.ndarray]:
        """Index arrays per branch; empty branches come back empty."""
        branches = eval_predicate_batch(pred, self.matrix, self.controller.variables)
        return [self.indices[branches == k] for k in range(pred.arity)]

    def split(self, pred: Predicate) -> list["NodeView"]:
        parts = self.partition(pred)
        if any(len(p) == 0 for p in parts):
            raise ValueError("predicate does not split the view")
        return [NodeView(self.controller, p) for p in parts]
