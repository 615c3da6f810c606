import random

import pytest

from ctrltree import expressions as ex
from ctrltree.model import (
    Algebraic,
    Controller,
    DecisionTree,
    Inner,
    Leaf,
    VariableMeta,
)

# 4-state cruise-control excerpt: (v_o, v_f, d) -> allowed actions
CRUISE_ROWS = {
    (0.0, 0.0, 5.0): {"neu"},
    (2.0, 6.0, 10.0): {"dec", "neu", "acc"},
    (2.0, 6.0, 15.0): {"dec", "neu", "acc"},
    (4.0, 4.0, 15.0): {"dec", "neu"},
}

# 2D grid controller where one vertical split suffices iff the measure
# looks at shared actions: x in {1,2}, y in {1,2,3}
GRID_ROWS = {
    (1.0, 1.0): {"a"},
    (1.0, 2.0): {"a", "c"},
    (1.0, 3.0): {"a", "c"},
    (2.0, 1.0): {"b"},
    (2.0, 2.0): {"b", "c"},
    (2.0, 3.0): {"b", "c"},
}


@pytest.fixture
def cruise() -> Controller:
    return Controller(
        [VariableMeta("v_o"), VariableMeta("v_f"), VariableMeta("d")],
        CRUISE_ROWS)


@pytest.fixture
def grid() -> Controller:
    return Controller([VariableMeta("x"), VariableMeta("y")], GRID_ROWS)


@pytest.fixture
def colours_mergeable() -> Controller:
    """red and green behave identically, blue differs."""
    return Controller(
        [VariableMeta("colour", "categorical", ("b", "g", "r"))],
        {("r",): {"a"}, ("g",): {"a"}, ("b",): {"b"}})


@pytest.fixture
def colours_distinct() -> Controller:
    """every colour maps to its own action."""
    return Controller(
        [VariableMeta("colour", "categorical", ("b", "g", "r"))],
        {("r",): {"a"}, ("g",): {"b"}, ("b",): {"c"}})


def hand_built_cruise_tree() -> DecisionTree:
    """The reference 5-node tree: root tests v_o > 0, its true child tests
    v_f > 4."""
    v_o = ex.Name("v_o")
    v_f = ex.Name("v_f")
    nodes = {
        0: Inner(0, Algebraic(v_o, ">", ex.Num(0.0), "v_o > 0"), (1, 2)),
        1: Leaf(1, frozenset({"neu"})),
        2: Inner(2, Algebraic(v_f, ">", ex.Num(4.0), "v_f > 4"), (3, 4)),
        3: Leaf(3, frozenset({"dec", "neu"})),
        4: Leaf(4, frozenset({"dec", "neu", "acc"})),
    }
    variables = (VariableMeta("v_o"), VariableMeta("v_f"), VariableMeta("d"))
    return DecisionTree(nodes, 0, variables)


@pytest.fixture
def cruise_tree() -> DecisionTree:
    return hand_built_cruise_tree()


def random_controller(rng: random.Random, max_states: int = 200,
                      max_vars: int = 5, max_actions: int = 6,
                      categorical: bool = True) -> Controller:
    """Random permissive controller on an integer grid."""
    n_vars = rng.randint(1, max_vars)
    kinds = [rng.random() < 0.3 and categorical for _ in range(n_vars)]
    if all(kinds):
        kinds[0] = False
    variables = []
    for i, is_cat in enumerate(kinds):
        if is_cat:
            size = rng.randint(2, 4)
            variables.append(VariableMeta(f"v{i}", "categorical",
                                          tuple(f"k{j}" for j in range(size))))
        else:
            variables.append(VariableMeta(f"v{i}"))
    actions = [f"a{j}" for j in range(rng.randint(1, max_actions))]
    n_states = rng.randint(1, max_states)
    rows = {}
    for _ in range(n_states):
        state = tuple(
            rng.choice(v.dictionary) if v.kind == "categorical"
            else float(rng.randint(-5, 5))
            for v in variables)
        size = rng.randint(1, len(actions))
        rows[state] = set(rng.sample(actions, size))
    return Controller(variables, rows)
