import json
import random
import re
import shutil
import subprocess
import tempfile
from pathlib import Path

import pytest

from ctrltree.builder import BuildConfig, build_tree
from ctrltree.errors import MalformedJson, SchemaVersionMismatch
from ctrltree.export import export_c, export_dot, export_json, import_json
from ctrltree.impurity import Determinizer, DetMode, ImpurityMeasure
from ctrltree.ingest import parse_domain_knowledge
from ctrltree.model import (
    Controller,
    DecisionTree,
    Leaf,
    VariableMeta,
    evaluate_tree,
)

from conftest import random_controller


def check_dot_syntax(text: str) -> None:
    """Minimal DOT grammar check: one digraph block of node/edge statements."""
    lines = [l.strip() for l in text.strip().splitlines()]
    assert re.fullmatch(r"digraph \w+ \{", lines[0])
    assert lines[-1] == "}"
    stmt = re.compile(
        r"(node \[[^\]]*\];"                      # defaults
        r"|\w+ \[label=\"(?:[^\"\\]|\\.)*\"(, shape=\w+)?\];"  # node
        r"|\w+ -> \w+ \[label=\"(?:[^\"\\]|\\.)*\"\];)")       # edge
    for line in lines[1:-1]:
        assert stmt.fullmatch(line), f"bad DOT statement: {line!r}"


class TestJsonRoundTrip:
    def test_cruise_tree(self, cruise, cruise_tree):
        text = export_json(cruise_tree)
        doc = json.loads(text)
        assert doc["version"] == 1
        again = import_json(text)
        assert again == cruise_tree

    def test_single_leaf(self):
        tree = DecisionTree({0: Leaf(0, frozenset({"go"}))}, 0, (VariableMeta("x"),))
        assert import_json(export_json(tree)) == tree

    def test_built_trees_round_trip(self):
        rng = random.Random(23)
        for _ in range(25):
            c = random_controller(rng, max_states=50, max_vars=4)
            tree = build_tree(c, BuildConfig())
            assert import_json(export_json(tree)) == tree

    def test_inexact_flag_preserved(self, cruise):
        tree = build_tree(cruise, BuildConfig(max_depth=0))
        again = import_json(export_json(tree))
        assert not again.is_exact

    def test_version_mismatch(self, cruise_tree):
        doc = json.loads(export_json(cruise_tree))
        doc["version"] = 2
        with pytest.raises(SchemaVersionMismatch):
            import_json(json.dumps(doc))

    def test_tampered_child_count(self, cruise_tree):
        doc = json.loads(export_json(cruise_tree))
        doc["root"]["children"].append({"actions": [0]})
        with pytest.raises(MalformedJson):
            import_json(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(MalformedJson):
            import_json("not json at all")

    def test_empty_leaf_rejected(self, cruise_tree):
        doc = json.loads(export_json(cruise_tree))
        doc["root"] = {"actions": []}
        with pytest.raises(MalformedJson):
            import_json(json.dumps(doc))


class TestDot:
    def test_cruise_tree_shape(self, cruise_tree):
        dot = export_dot(cruise_tree)
        check_dot_syntax(dot)
        assert dot.count("->") == 4
        assert len(re.findall(r"^  n\d+ \[", dot, re.M)) == 5
        assert dot.count('label="true"') == 2
        assert dot.count('label="false"') == 2

    def test_grouping_edges(self, colours_distinct):
        tree = build_tree(colours_distinct, BuildConfig())
        dot = export_dot(tree)
        check_dot_syntax(dot)
        root = tree.nodes[tree.root]
        assert root.predicate.arity == 3
        for group in root.predicate.groups:
            assert f'label="{", ".join(group)}"' in dot

    def test_single_leaf(self):
        tree = DecisionTree({0: Leaf(0, frozenset({"go"}))}, 0, (VariableMeta("x"),))
        dot = export_dot(tree)
        check_dot_syntax(dot)
        assert "->" not in dot

    def test_random_trees_validate(self):
        rng = random.Random(29)
        for _ in range(15):
            c = random_controller(rng, max_states=40, max_vars=3)
            check_dot_syntax(export_dot(build_tree(c, BuildConfig())))


HAVE_CC = shutil.which("cc") is not None


def compile_and_classify(tree: DecisionTree, states) -> list[frozenset]:
    """Compile the exported classifier plus a driver main() and run it on
    every state; returns the action-label sets it reports."""
    source = export_c(tree)
    variables = tree.variables
    lines = [source, "#include <stdio.h>", "int main(void) {"]
    lines.append(f"    double x[{max(len(variables), 1)}];")
    lines.append(f"    int out[{max(len(tree.label_table), 1)}];")
    for state in states:
        for i, var in enumerate(variables):
            if var.kind == "numeric":
                lines.append(f"    x[{i}] = {state[i]!r};")
            else:
                code = var.dictionary.index(state[i])
                lines.append(f"    x[{i}] = {code};")
        lines.append("    { int n = classify(x, out);")
        lines.append('      for (int i = 0; i < n; i++) printf("%d ", out[i]);')
        lines.append('      printf("\\n"); }')
    lines.append("    return 0;")
    lines.append("}")

    with tempfile.TemporaryDirectory() as tmp:
        src = Path(tmp) / "classify.c"
        binary = Path(tmp) / "classify"
        src.write_text("\n".join(lines))
        subprocess.run(["cc", "-std=c99", "-O1", "-o", str(binary), str(src), "-lm"],
                       check=True, capture_output=True)
        out = subprocess.run([str(binary)], check=True, capture_output=True, text=True)
    sets = []
    for line in out.stdout.strip("\n").split("\n"):
        ids = [int(tok) for tok in line.split()]
        sets.append(frozenset(tree.label_table[i] for i in ids))
    return sets


@pytest.mark.skipif(not HAVE_CC, reason="no C99 toolchain on PATH")
class TestCCode:
    def test_cruise_shape(self, cruise_tree):
        source = export_c(cruise_tree)
        assert "int classify(const double x[], int actions_out[])" in source
        assert source.count("if (") == 2
        assert len(re.findall(r"return \d+;", source)) == 3

    def test_single_leaf_body(self):
        tree = DecisionTree({0: Leaf(0, frozenset({"go"}))}, 0, (VariableMeta("x"),))
        source = export_c(tree)
        assert "actions_out[0] = 0;" in source
        assert "return 1;" in source

    def test_cruise_agreement(self, cruise, cruise_tree):
        got = compile_and_classify(cruise_tree, list(cruise.rows))
        for state, expected in zip(cruise.rows, got):
            assert expected == evaluate_tree(cruise_tree, state)

    def test_algebraic_with_log_compiles_and_agrees(self):
        rows = {(float(i),): {"lo" if i < 3 else "hi"} for i in range(1, 7)}
        c = Controller((VariableMeta("x"),), rows)
        (t,) = parse_domain_knowledge("log(x_0) <= c_0")
        tree = build_tree(c, BuildConfig(templates=(t,),
                                         priorities={"axis": 0.0, "linear": 0.0}))
        source = export_c(tree)
        assert "log(" in source
        got = compile_and_classify(tree, list(rows))
        for state, expected in zip(rows, got):
            assert expected == evaluate_tree(tree, state)

    def test_categorical_and_random_agreement(self):
        rng = random.Random(37)
        for _ in range(8):
            c = random_controller(rng, max_states=40, max_vars=3)
            for config in (BuildConfig(),
                           BuildConfig(measure=ImpurityMeasure.MULTI_LABEL_ENTROPY,
                                       determinizer=Determinizer(DetMode.SAFE_EARLY_STOP))):
                tree = build_tree(c, config)
                got = compile_and_classify(tree, c.states)
                for state, expected in zip(c.states, got):
                    assert expected == evaluate_tree(tree, state)
