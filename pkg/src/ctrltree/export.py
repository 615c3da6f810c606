"""Tree serialization: round-trippable JSON, Graphviz DOT, and C source.

The C output is one translation unit defining
``int classify(const double x[], int actions_out[])`` whose body is
nested if-else only; it writes the allowed action ids and returns their
count.  Categorical coordinates are passed as integer codes documented in
an emitted comment block.
"""

from __future__ import annotations

import json

from . import expressions as ex
from .errors import MalformedJson, SchemaVersionMismatch, UnsupportedFunction
from .model import (
    Algebraic,
    AxisAligned,
    CategoricalGrouping,
    DecisionTree,
    Inner,
    Leaf,
    Linear,
    Node,
    VariableMeta,
    display_predicate,
)

SCHEMA_VERSION = 1


# --------------------------------------------------------------------------
# JSON


def _pred_to_doc(pred, variables) -> dict:
    display = display_predicate(pred, variables)
    if isinstance(pred, AxisAligned):
        return {"type": "axis", "var": pred.var, "threshold": pred.threshold,
                "display": display}
    if isinstance(pred, Linear):
        return {"type": "linear", "coefficients": list(pred.coefficients),
                "threshold": pred.threshold, "display": display}
    if isinstance(pred, CategoricalGrouping):
        return {"type": "grouping", "var": pred.var,
                "groups": [list(g) for g in pred.groups], "display": display}
    return {"type": "algebraic", "lhs": ex.to_text(pred.lhs),
            "comparator": pred.comparator, "rhs": ex.to_text(pred.rhs),
            "provenance": pred.provenance, "display": display}


def _node_to_doc(tree: DecisionTree, nid: int, label_index) -> dict:
    node = tree.nodes[nid]
    if isinstance(node, Leaf):
        doc: dict = {"actions": sorted(label_index[a] for a in node.actions)}
        if node.inexact:
            doc["inexact"] = True
        return doc
    return {"pred": _pred_to_doc(node.predicate, tree.variables),
            "children": [_node_to_doc(tree, c, label_index) for c in node.children]}


def export_json(tree: DecisionTree) -> str:
    label_index = {a: i for i, a in enumerate(tree.label_table)}
    doc = {
        "version": SCHEMA_VERSION,
        "variables": [
            {"name": v.name, "kind": v.kind,
             **({"dictionary": list(v.dictionary)} if v.dictionary else {})}
            for v in tree.variables
        ],
        "actions": list(tree.label_table),
        "root": _node_to_doc(tree, tree.root, label_index),
    }
    return json.dumps(doc, indent=2)


def _pred_from_doc(doc: dict):
    try:
        kind = doc["type"]
        if kind == "axis":
            return AxisAligned(int(doc["var"]), float(doc["threshold"]))
        if kind == "linear":
            return Linear(tuple(float(c) for c in doc["coefficients"]),
                          float(doc["threshold"]))
        if kind == "grouping":
            return CategoricalGrouping(int(doc["var"]),
                                       tuple(tuple(g) for g in doc["groups"]))
        if kind == "algebraic":
            return Algebraic(ex.parse_expression(doc["lhs"]), doc["comparator"],
                             ex.parse_expression(doc["rhs"]),
                             doc.get("provenance", ""))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedJson(f"bad predicate document: {e}") from None
    raise MalformedJson(f"unknown predicate type {kind!r}")


def import_json(text: str | bytes) -> DecisionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedJson(f"tree file is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise MalformedJson("tree document must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"expected schema version {SCHEMA_VERSION}, found {doc.get('version')!r}")
    try:
        variables = tuple(
            VariableMeta(v["name"], v["kind"],
                         tuple(v["dictionary"]) if "dictionary" in v else None)
            for v in doc["variables"])
        actions = [str(a) for a in doc["actions"]]
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedJson(f"bad header: {e}") from None

    nodes: dict[int, Node] = {}

    def walk(node_doc, nid: int) -> int:
        """Materialize a node; returns the next free id (preorder)."""
        if not isinstance(node_doc, dict):
            raise MalformedJson("node must be an object")
        if "actions" in node_doc:
            try:
                labels = frozenset(actions[i] for i in node_doc["actions"])
            except (IndexError, TypeError) as e:
                raise MalformedJson(f"bad leaf action ids: {e}") from None
            if not labels:
                raise MalformedJson("leaf with no actions")
            nodes[nid] = Leaf(nid, labels, bool(node_doc.get("inexact", False)))
            return nid + 1
        if "pred" not in node_doc or "children" not in node_doc:
            raise MalformedJson("inner node needs 'pred' and 'children'")
        pred = _pred_from_doc(node_doc["pred"])
        children_docs = node_doc["children"]
        if not isinstance(children_docs, list) or len(children_docs) != pred.arity:
            raise MalformedJson(
                f"predicate of arity {pred.arity} with "
                f"{len(children_docs) if isinstance(children_docs, list) else '?'} children")
        child_ids = []
        nxt = nid + 1
        for child in children_docs:
            child_ids.append(nxt)
            nxt = walk(child, nxt)
        nodes[nid] = Inner(nid, pred, tuple(child_ids))
        return nxt

    walk(doc.get("root"), 0)
    try:
        return DecisionTree(nodes, 0, variables, actions)
    except ValueError as e:
        raise MalformedJson(str(e)) from None


# --------------------------------------------------------------------------
# DOT


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(tree: DecisionTree) -> str:
    lines = ["digraph controller {", "  node [shape=box];"]
    order = sorted(tree.nodes)
    for nid in order:
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            label = "{" + ", ".join(sorted(node.actions)) + "}"
            if node.inexact:
                label += " (inexact)"
            lines.append(f'  n{nid} [label="{_dot_escape(label)}", shape=ellipse];')
        else:
            label = display_predicate(node.predicate, tree.variables)
            lines.append(f'  n{nid} [label="{_dot_escape(label)}"];')
    for nid in order:
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            continue
        pred = node.predicate
        for branch, child in enumerate(node.children):
            if isinstance(pred, CategoricalGrouping):
                edge = ", ".join(pred.groups[branch])
            else:
                edge = "true" if branch == 1 else "false"
            lines.append(f'  n{nid} -> n{child} [label="{_dot_escape(edge)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# C code


_C_FUNCTIONS = {"exp": "exp", "log": "log", "log2": "log2", "sqrt": "sqrt",
                "sin": "sin", "cos": "cos", "tan": "tan", "abs": "fabs"}


def _c_float(x: float) -> str:
    return f"{x:.17g}"


def _c_expr(expr: ex.Expression, names: dict[str, int]) -> str:
    if isinstance(expr, ex.Num):
        body = _c_float(expr.value)
        return f"({body})" if expr.value < 0 else body
    if isinstance(expr, ex.Name):
        if expr.ident not in names:
            raise UnsupportedFunction(f"unbound symbol {expr.ident!r} in predicate")
        return f"x[{names[expr.ident]}]"
    if isinstance(expr, ex.Neg):
        return f"(-{_c_expr(expr.operand, names)})"
    if isinstance(expr, ex.BinOp):
        left, right = _c_expr(expr.left, names), _c_expr(expr.right, names)
        if expr.op == "^":
            return f"pow({left}, {right})"
        return f"({left} {expr.op} {right})"
    assert isinstance(expr, ex.Call)
    args = [_c_expr(a, names) for a in expr.args]
    if expr.fn in ("min", "max"):
        fn = "fmin" if expr.fn == "min" else "fmax"
        acc = args[0]
        for a in args[1:]:
            acc = f"{fn}({acc}, {a})"
        return acc
    if expr.fn not in _C_FUNCTIONS:
        raise UnsupportedFunction(f"function {expr.fn!r} has no C99 counterpart")
    return f"{_C_FUNCTIONS[expr.fn]}({args[0]})"


def _c_condition(pred, variables, names: dict[str, int]) -> str:
    if isinstance(pred, AxisAligned):
        return f"x[{pred.var}] <= {_c_float(pred.threshold)}"
    if isinstance(pred, Linear):
        terms = [f"{_c_float(c)} * x[{i}]"
                 for i, c in enumerate(pred.coefficients) if c != 0.0]
        return f"{' + '.join(terms)} <= {_c_float(pred.threshold)}"
    assert isinstance(pred, Algebraic)
    left, right = _c_expr(pred.lhs, names), _c_expr(pred.rhs, names)
    if pred.comparator == "=":
        return (f"fabs({left} - {right}) <= "
                f"1e-9 * fmax(fabs({left}), fabs({right}))")
    return f"{left} {pred.comparator} {right}"


def _c_group_condition(pred: CategoricalGrouping, branch: int, var: int) -> str:
    codes = pred.groups[branch]
    return " || ".join(f"v{var} == TOK_{var}_{_c_ident(tok)}" for tok in codes)


def _c_ident(token: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in token)


def export_c(tree: DecisionTree) -> str:
    """Emit a C99 translation unit with the classify() entry point."""
    variables = tree.variables
    names = {f"x_{i}": i for i, v in enumerate(variables) if v.kind == "numeric"}
    names.update({v.name: i for i, v in enumerate(variables) if v.kind == "numeric"})
    label_index = {a: i for i, a in enumerate(tree.label_table)}

    categorical_used = sorted({
        n.predicate.var for n in tree.nodes.values()
        if isinstance(n, Inner) and isinstance(n.predicate, CategoricalGrouping)})

    out: list[str] = []
    out.append("/* Decision-tree controller.")
    out.append(" *")
    out.append(" * int classify(const double x[], int actions_out[])")
    out.append(" *   x: state vector, one entry per variable (see below);")
    out.append(" *      categorical variables are passed as integer codes.")
    out.append(" *   actions_out: receives the ids of the allowed actions.")
    out.append(" *   returns: number of ids written.")
    out.append(" *")
    out.append(" * variables:")
    for i, v in enumerate(variables):
        if v.kind == "numeric":
            out.append(f" *   x[{i}]: {v.name} (numeric)")
        else:
            codes = ", ".join(f"{k}={tok}" for k, tok in enumerate(v.dictionary or ()))
            out.append(f" *   x[{i}]: {v.name} (categorical: {codes})")
    out.append(" * actions:")
    for i, a in enumerate(tree.label_table):
        out.append(f" *   {i}: {a}")
    out.append(" */")
    out.append("")
    out.append("#include <math.h>")
    out.append("")
    for var in categorical_used:
        dictionary = variables[var].dictionary or ()
        for code, tok in enumerate(dictionary):
            out.append(f"#define TOK_{var}_{_c_ident(tok)} {code}")
    if categorical_used:
        out.append("")
    out.append("int classify(const double x[], int actions_out[]) {")
    for var in categorical_used:
        out.append(f"    const int v{var} = (int) x[{var}];")

    def emit(nid: int, indent: int) -> None:
        pad = "    " * indent
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            for k, a in enumerate(sorted(node.actions, key=label_index.get)):
                out.append(f"{pad}actions_out[{k}] = {label_index[a]};")
            out.append(f"{pad}return {len(node.actions)};")
            return
        pred = node.predicate
        if isinstance(pred, CategoricalGrouping):
            for branch in range(len(pred.groups) - 1):
                kw = "if" if branch == 0 else "} else if"
                out.append(f"{pad}{kw} ({_c_group_condition(pred, branch, pred.var)}) {{")
                emit(node.children[branch], indent + 1)
            out.append(f"{pad}}} else {{")
            emit(node.children[-1], indent + 1)
            out.append(f"{pad}}}")
        else:
            # child 1 is the true branch
            out.append(f"{pad}if ({_c_condition(pred, variables, names)}) {{")
            emit(node.children[1], indent + 1)
            out.append(f"{pad}}} else {{")
            emit(node.children[0], indent + 1)
            out.append(f"{pad}}}")

    emit(tree.root, 1)
    out.append("}")
    return "\n".join(out) + "\n"
