"""Decision-path tracing and operator-driven simulation.

There is no dynamics engine here: successors come from the operator or
from an optional transitions file mapping (state, action) to a successor
list.  The simulation never permits an action outside the current leaf's
set, so a trace cannot violate the represented controller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DisallowedAction, MalformedJson, UnknownSuccessor
from .model import DecisionTree, Inner, _normalize_state, display_predicate, eval_predicate_on_state


@dataclass
class DecisionPath:
    """Root-to-leaf trace: (node id, predicate display, branch taken)."""
    steps: tuple[tuple[int, str, int], ...]
    leaf_id: int
    actions: frozenset[str]

    def to_dict(self) -> dict:
        return {"steps": [{"node": nid, "predicate": disp, "branch": br}
                          for nid, disp, br in self.steps],
                "leaf": self.leaf_id,
                "actions": sorted(self.actions)}


def decision_path(tree: DecisionTree, state: Sequence) -> DecisionPath:
    state = _normalize_state(tuple(state), tree.variables)
    steps = []
    node = tree.nodes[tree.root]
    while isinstance(node, Inner):
        branch = eval_predicate_on_state(node.predicate, state, tree.variables)
        steps.append((node.id, display_predicate(node.predicate, tree.variables), branch))
        node = tree.nodes[node.children[branch]]
    return DecisionPath(tuple(steps), node.id, node.actions)


TransitionMap = dict[tuple[tuple, str], list[tuple]]


def parse_transitions(text: str | bytes, tree: DecisionTree) -> TransitionMap:
    """`{"transitions": [{"state": [...], "action": "a",
    "successors": [[...], ...]}]}` keyed on normalized states."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedJson(f"transitions file is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("transitions"), list):
        raise MalformedJson("expected an object with a 'transitions' array")
    out: TransitionMap = {}
    for k, entry in enumerate(doc["transitions"]):
        try:
            state = _normalize_state(tuple(entry["state"]), tree.variables)
            action = str(entry["action"])
            successors = [_normalize_state(tuple(s), tree.variables)
                          for s in entry["successors"]]
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedJson(f"transition {k}: {e}") from None
        out.setdefault((state, action), []).extend(successors)
    return out


@dataclass
class Simulation:
    """Single-writer stepping of a controlled run."""
    tree: DecisionTree
    state: tuple
    transitions: TransitionMap | None = None
    trace: list[tuple[tuple, str, DecisionPath]] = field(default_factory=list)

    def __post_init__(self):
        self.state = _normalize_state(tuple(self.state), self.tree.variables)

    def current_path(self) -> DecisionPath:
        return decision_path(self.tree, self.state)

    def allowed(self) -> frozenset[str]:
        return self.current_path().actions

    def step(self, action: str, next_state: Sequence | None = None) -> DecisionPath:
        """Take `action` at the current state and advance.

        The successor is taken from `next_state` when given (validated
        against the transitions file when one is present), otherwise from
        a unique transitions-file successor.
        """
        path = self.current_path()
        if action not in path.actions:
            raise DisallowedAction(
                f"action {action!r} not in the allowed set {sorted(path.actions)}")
        successors = None
        if self.transitions is not None:
            successors = self.transitions.get((self.state, action))
        if next_state is not None:
            nxt = _normalize_state(tuple(next_state), self.tree.variables)
            if successors is not None and nxt not in successors:
                raise UnknownSuccessor(
                    f"{nxt} is not a listed successor of ({self.state}, {action})")
        else:
            if not successors:
                raise UnknownSuccessor(
                    f"no successor on file for ({self.state}, {action}); "
                    f"supply the next state explicitly")
            if len(successors) > 1:
                raise UnknownSuccessor(
                    f"({self.state}, {action}) has {len(successors)} successors; "
                    f"pick one explicitly")
            nxt = successors[0]
        self.trace.append((self.state, action, path))
        self.state = nxt
        return path

    def trace_dict(self) -> dict:
        return {
            "current_state": list(self.state),
            "allowed": sorted(self.allowed()),
            "trace": [{"state": list(s), "action": a, "path": p.to_dict()}
                      for s, a, p in self.trace],
        }
