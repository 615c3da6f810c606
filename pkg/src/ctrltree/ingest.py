"""Parsers for all controller input formats.

Formats:

* Controller CSV: UTF-8, ``#`` lines are directives/comments, the first
  directive must be ``#PERMISSIVE`` or ``#NON-PERMISSIVE``, optionally
  ``#VARS <n>``; each data line is ``<n state fields>,<action token>``
  with no quoting.  Repeated states union their actions in permissive
  files and are an error in non-permissive ones.
* Metadata JSON: ``{"x_column_types": {"numeric": [...], "categorical":
  [...]}, "x_column_names": [...]}``.
* Strategy JSON: ``{"variables": [...], "rows": [{"state": [...],
  "actions": [...]}, ...]}`` as exported from probabilistic model
  checkers.
* Domain knowledge: one ``term CMP term; def; def...`` per line, where a
  def is ``c_k in {v1,v2,...}`` or ``c_k arbitrary`` (a coefficient
  without a def is arbitrary).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence

from . import expressions as ex
from .errors import (
    ArityMismatch,
    DuplicateStateInDeterministicFile,
    EmptyActionList,
    MalformedJson,
    ParseError,
    UndeclaredCoefficient,
)
from .expressions import parse_comparison, parse_expression  # re-exported
from .model import CATEGORICAL, NUMERIC, Controller, VariableMeta

__all__ = [
    "parse_controller_csv", "serialize_controller_csv",
    "parse_metadata", "parse_metadata_document", "MetadataDocument",
    "parse_strategy_json", "parse_domain_knowledge",
    "parse_expression", "parse_comparison",
    "CoefficientSpec", "PredicateTemplate",
]


# --------------------------------------------------------------------------
# controller CSV


def _decode(text: str | bytes) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}") from None
    return text


def parse_controller_csv(text: str | bytes,
                         meta: Sequence[VariableMeta] | None = None) -> Controller:
    """Parse controller CSV into a Controller, merging repeated states.

    `meta` fixes variable names/kinds; without it every column is numeric
    and named x_i.  Categorical dictionaries missing from `meta` are built
    from the observed tokens (sorted), so line order never matters.
    """
    src = _decode(text)
    permissive: bool | None = None
    declared_vars: int | None = len(meta) if meta is not None else None
    rows: dict[tuple, set[str]] = {}

    for ln, raw in enumerate(src.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            head = line[1:].strip()
            word = head.split()[0].upper() if head else ""
            if word in ("PERMISSIVE", "NON-PERMISSIVE"):
                if permissive is None:
                    permissive = word == "PERMISSIVE"
                continue
            if word == "VARS":
                if permissive is None:
                    raise ParseError("#VARS before the permissiveness directive", line=ln)
                parts = head.split()
                if len(parts) != 2 or not parts[1].isdigit():
                    raise ParseError("#VARS expects one integer", line=ln)
                n = int(parts[1])
                if declared_vars is not None and n != declared_vars:
                    raise ArityMismatch(
                        f"#VARS {n} disagrees with {declared_vars} declared variables")
                declared_vars = n
                continue
            continue  # plain comment
        if permissive is None:
            raise ParseError("data before #PERMISSIVE / #NON-PERMISSIVE directive", line=ln)

        fields = raw.split(",")
        if declared_vars is None:
            declared_vars = len(fields) - 1
            if declared_vars < 1:
                raise ParseError("data line with no state fields", line=ln)
        if len(fields) != declared_vars + 1:
            raise ArityMismatch(
                f"line {ln}: expected {declared_vars} state fields plus one "
                f"action token, found {len(fields)} fields")

        if meta is None:
            meta = tuple(VariableMeta(f"x_{i}") for i in range(declared_vars))

        state = []
        col = 1
        for j, field in enumerate(fields[:-1]):
            value = field.strip()
            if meta[j].kind == NUMERIC:
                try:
                    state.append(float(value))
                except ValueError:
                    raise ParseError(f"invalid numeric value {value!r}",
                                     line=ln, column=col) from None
            else:
                if not value:
                    raise ParseError("empty categorical value", line=ln, column=col)
                state.append(value)
            col += len(field) + 1
        action = fields[-1].strip()
        if not action:
            raise ParseError("empty action token", line=ln, column=col)

        key = tuple(state)
        if key in rows:
            if not permissive:
                raise DuplicateStateInDeterministicFile(
                    f"line {ln}: state {key} appears twice in a non-permissive file")
            rows[key].add(action)
        else:
            rows[key] = {action}

    if permissive is None:
        raise ParseError("missing #PERMISSIVE / #NON-PERMISSIVE directive")
    if meta is None:
        meta = ()
    return Controller(meta, rows, permissive=permissive)


def _format_numeric(x: float) -> str:
    return ex._format_number(x)


def serialize_controller_csv(controller: Controller) -> str:
    """Canonical CSV: sorted states, sorted actions, one action per line."""
    lines = ["#PERMISSIVE" if controller.permissive else "#NON-PERMISSIVE",
             f"#VARS {len(controller.variables)}"]
    for state in controller.states:
        fields = []
        for value, var in zip(state, controller.variables):
            if var.kind == NUMERIC:
                fields.append(_format_numeric(value))
            else:
                if "," in value or value.startswith("#"):
                    raise ValueError(f"token {value!r} not representable in CSV")
                fields.append(value)
        for action in sorted(controller.rows[state]):
            if "," in action:
                raise ValueError(f"action {action!r} not representable in CSV")
            lines.append(",".join(fields + [action]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# metadata JSON


@dataclass(frozen=True)
class MetadataDocument:
    variables: tuple[VariableMeta, ...]
    objective: str | None = None


def parse_metadata_document(text: str | bytes) -> MetadataDocument:
    from .errors import GapInColumnCoverage, OverlappingColumnTypes

    try:
        doc = json.loads(_decode(text))
    except (ParseError, json.JSONDecodeError) as e:
        raise MalformedJson(f"metadata is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("x_column_types"), dict):
        raise MalformedJson("metadata must be an object with 'x_column_types'")
    types = doc["x_column_types"]
    numeric = types.get("numeric")
    categorical = types.get("categorical")
    if not isinstance(numeric, list) or not isinstance(categorical, list):
        raise MalformedJson("'x_column_types' needs integer arrays 'numeric' and 'categorical'")
    for idx in numeric + categorical:
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise MalformedJson(f"column index {idx!r} is not a non-negative integer")

    indices = numeric + categorical
    if len(set(indices)) != len(indices):
        both = sorted(set(numeric) & set(categorical)) or sorted(
            i for i in set(indices) if indices.count(i) > 1)
        raise OverlappingColumnTypes(f"column(s) {both} typed more than once")
    n = len(indices)
    if set(indices) != set(range(n)):
        missing = sorted(set(range(max(indices) + 1 if indices else 0)) - set(indices))
        raise GapInColumnCoverage(f"column indices do not cover 0..{n - 1} "
                                  f"(missing {missing})")

    names = doc.get("x_column_names")
    if names is None:
        names = [f"x_{i}" for i in range(n)]
    else:
        if (not isinstance(names, list) or len(names) != n
                or not all(isinstance(s, str) for s in names)):
            raise MalformedJson(f"'x_column_names' must be {n} strings")
        if len(set(names)) != n:
            raise MalformedJson("variable names must be unique")

    categorical_set = set(categorical)
    variables = tuple(
        VariableMeta(names[i], CATEGORICAL if i in categorical_set else NUMERIC)
        for i in range(n))
    objective = doc.get("objective")
    if objective is not None and not isinstance(objective, str):
        raise MalformedJson("'objective' must be a string when present")
    return MetadataDocument(variables, objective)


def parse_metadata(text: str | bytes) -> list[VariableMeta]:
    return list(parse_metadata_document(text).variables)


# --------------------------------------------------------------------------
# strategy JSON


def parse_strategy_json(text: str | bytes,
                        meta: Sequence[VariableMeta] | None = None) -> Controller:
    """Parse the positional strategy schema used for model-checker exports.

    Column kinds come from `meta` when given, otherwise they are inferred:
    a column holding only numbers is numeric, only strings categorical.
    """
    try:
        doc = json.loads(_decode(text))
    except (ParseError, json.JSONDecodeError) as e:
        raise MalformedJson(f"strategy file is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise MalformedJson("strategy document must be a JSON object")
    names = doc.get("variables")
    raw_rows = doc.get("rows")
    if (not isinstance(names, list) or not all(isinstance(s, str) for s in names)
            or not isinstance(raw_rows, list)):
        raise MalformedJson("expected 'variables' (strings) and 'rows' (array)")

    n = len(names)
    if meta is not None:
        if len(meta) != n:
            raise ArityMismatch(f"metadata declares {len(meta)} variables, "
                                f"strategy header has {n}")
        variables = tuple(meta)
    else:
        kinds: list[str | None] = [None] * n

    states: list[tuple] = []
    actions_per_state: list[list[str]] = []
    for k, row in enumerate(raw_rows):
        if not isinstance(row, dict) or "state" not in row or "actions" not in row:
            raise MalformedJson(f"row {k} must carry 'state' and 'actions'")
        state, actions = row["state"], row["actions"]
        if not isinstance(state, list) or len(state) != n:
            raise ArityMismatch(f"row {k}: state has {len(state) if isinstance(state, list) else '?'} "
                                f"coordinates, expected {n}")
        if not isinstance(actions, list) or not all(isinstance(a, str) for a in actions):
            raise MalformedJson(f"row {k}: 'actions' must be an array of strings")
        if not actions:
            raise EmptyActionList(f"row {k}: empty action list for state {state}")
        if meta is None:
            for j, v in enumerate(state):
                if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                    raise MalformedJson(f"row {k}: unsupported coordinate {v!r}")
                kind = CATEGORICAL if isinstance(v, str) else NUMERIC
                if kinds[j] is None:
                    kinds[j] = kind
                elif kinds[j] != kind:
                    raise MalformedJson(f"column {j} mixes numeric and string values")
        states.append(tuple(state))
        actions_per_state.append(actions)

    if meta is None:
        variables = tuple(VariableMeta(names[j], kinds[j] or NUMERIC) for j in range(n))

    rows: dict[tuple, set[str]] = {}
    for state, actions in zip(states, actions_per_state):
        rows.setdefault(state, set()).update(actions)
    return Controller(variables, rows)


# --------------------------------------------------------------------------
# domain knowledge


@dataclass(frozen=True)
class CoefficientSpec:
    """Finite set of candidate values, or None for a fully free coefficient."""
    values: tuple[float, ...] | None = None

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    @classmethod
    def finite(cls, values) -> "CoefficientSpec":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def arbitrary(cls) -> "CoefficientSpec":
        return cls(None)


@dataclass(frozen=True)
class PredicateTemplate:
    name: str
    lhs: ex.Expression
    comparator: str
    rhs: ex.Expression
    coefficients: dict[str, CoefficientSpec]
    source: str

    def coefficient_names(self) -> list[str]:
        return sorted(self.coefficients)


_DEF_FINITE_RE = re.compile(r"^(c_\d+)\s+in\s+\{([^{}]*)\}$")
_DEF_ARBITRARY_RE = re.compile(r"^(c_\d+)\s+arbitrary$")
_NUMBER_TOKEN_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _parse_def(part: str, line: int) -> tuple[str, CoefficientSpec]:
    m = _DEF_FINITE_RE.match(part)
    if m:
        values = []
        for tok in m.group(2).split(","):
            tok = tok.strip()
            if not _NUMBER_TOKEN_RE.match(tok):
                raise ParseError(f"invalid coefficient value {tok!r}", line=line)
            values.append(float(tok))
        if not values:
            raise ParseError(f"empty value set for {m.group(1)}", line=line)
        return m.group(1), CoefficientSpec.finite(values)
    m = _DEF_ARBITRARY_RE.match(part)
    if m:
        return m.group(1), CoefficientSpec.arbitrary()
    raise ParseError(f"invalid coefficient definition {part!r}", line=line)


def parse_domain_knowledge(text: str | bytes) -> list[PredicateTemplate]:
    """One predicate template per non-comment line."""
    templates: list[PredicateTemplate] = []
    for ln, raw in enumerate(_decode(text).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(";")]
        try:
            lhs, cmp, rhs = parse_comparison(parts[0])
        except ParseError as e:
            raise ParseError(e.reason, line=ln, column=e.column) from None

        used = ex.coefficients_of(lhs) | ex.coefficients_of(rhs)
        specs: dict[str, CoefficientSpec] = {}
        for part in parts[1:]:
            if not part:
                continue
            name, spec = _parse_def(part, ln)
            if name not in used:
                raise UndeclaredCoefficient(
                    f"line {ln}: {name} is defined but never used in the predicate")
            specs[name] = spec
        for name in used:
            specs.setdefault(name, CoefficientSpec.arbitrary())

        if not ((ex.free_names(lhs) | ex.free_names(rhs)) - used):
            raise ParseError("template references no state variable", line=ln)
        templates.append(PredicateTemplate(
            name=f"t{len(templates)}", lhs=lhs, comparator=cmp, rhs=rhs,
            coefficients=specs, source=line))
    return templates
