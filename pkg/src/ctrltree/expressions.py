"""Arithmetic expressions over state variables and fit coefficients.

Grammar (precedence climbing):

    expr    := term | expr ('+'|'-') expr | expr ('*'|'/') expr
             | '-' expr | expr '^' expr | fn '(' expr {',' expr} ')'
             | '(' expr ')' | NUMBER | IDENT
    cmp     := expr ('<='|'>='|'<'|'>'|'=') expr

Binding strength: ``^`` > unary ``-`` > ``*``, ``/`` > ``+``, ``-``;
everything is left-associative except ``^`` (right).  Identifiers of the
shape ``c_<k>`` are fit coefficients, ``x_<i>`` fall back to positional
variable references when no variable carries that literal name.

Evaluation is numpy-based so a single code path serves both scalar states
and whole state-matrix columns.  Domain errors (``log`` of a non-positive
value, division by zero, overflow) raise :class:`NonEvaluableExpression`
at evaluation time, never at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

import numpy as np

from .errors import NonEvaluableExpression, ParseError

COMPARATORS = ("<=", ">=", "<", ">", "=")

# name -> (ufunc, min arity, max arity); None = unbounded
_FUNCTIONS = {
    "exp": (np.exp, 1, 1),
    "log": (np.log, 1, 1),
    "log2": (np.log2, 1, 1),
    "sqrt": (np.sqrt, 1, 1),
    "sin": (np.sin, 1, 1),
    "cos": (np.cos, 1, 1),
    "tan": (np.tan, 1, 1),
    "abs": (np.abs, 1, 1),
    "min": (np.minimum, 2, None),
    "max": (np.maximum, 2, None),
}

_COEFFICIENT_RE = re.compile(r"^c_\d+$")
_POSITIONAL_RE = re.compile(r"^x_(\d+)$")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expression", ...]


Expression = Union[Num, Name, Neg, BinOp, Call]


def const(value: float) -> Expression:
    """Numeric constant in the parser's image: negatives are Neg nodes, so
    printing and re-parsing is always the identity."""
    value = float(value)
    if value < 0:
        return Neg(Num(-value))
    return Num(value)


def is_coefficient(ident: str) -> bool:
    return bool(_COEFFICIENT_RE.match(ident))


def positional_index(ident: str) -> int | None:
    m = _POSITIONAL_RE.match(ident)
    return int(m.group(1)) if m else None


# --------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "cmp" | "end"
    text: str
    column: int  # 1-based


_NUMBER_RE = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _tokenize(text: str) -> Iterator[_Token]:
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        col = i + 1
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER_RE.match(text, i)
            assert m is not None
            yield _Token("num", m.group(0), col)
            i = m.end()
        elif c.isalpha() or c == "_":
            m = _IDENT_RE.match(text, i)
            assert m is not None
            yield _Token("ident", m.group(0), col)
            i = m.end()
        elif text.startswith(("<=", ">="), i):
            yield _Token("cmp", text[i:i + 2], col)
            i += 2
        elif c in "<>=":
            yield _Token("cmp", c, col)
            i += 1
        elif c in "+-*/^(),":
            yield _Token("op", c, col)
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", column=col)
    yield _Token("end", "", n + 1)


_ADD, _MUL, _UNARY, _POW = 1, 2, 3, 4
_BINARY_PREC = {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             column=tok.column)

    def parse_expr(self, min_prec: int = _ADD) -> Expression:
        left = self.parse_atom(min_prec)
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY_PREC:
                return left
            prec = _BINARY_PREC[tok.text]
            if prec < min_prec:
                return left
            self.advance()
            # ^ is right-associative, everything else left-associative
            right = self.parse_expr(prec if tok.text == "^" else prec + 1)
            left = BinOp(tok.text, left, right)

    def parse_atom(self, min_prec: int) -> Expression:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.parse_expr(_UNARY))
        if tok.kind == "op" and tok.text == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                return self.parse_call(tok)
            return Name(tok.text)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", column=tok.column)

    def parse_call(self, fn_tok: _Token) -> Expression:
        if fn_tok.text not in _FUNCTIONS:
            raise ParseError(f"unknown function {fn_tok.text!r}", column=fn_tok.column)
        self.expect_op("(")
        args = [self.parse_expr()]
        while self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            args.append(self.parse_expr())
        self.expect_op(")")
        _, lo, hi = _FUNCTIONS[fn_tok.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ParseError(f"function {fn_tok.text!r} takes "
                             f"{lo if hi == lo else f'at least {lo}'} argument(s), got {len(args)}",
                             column=fn_tok.column)
        return Call(fn_tok.text, tuple(args))

    def parse_comparator(self) -> str:
        tok = self.advance()
        if tok.kind != "cmp":
            raise ParseError(f"expected a comparator, found {tok.text or 'end of input'!r}",
                             column=tok.column)
        return tok.text

    def expect_end(self) -> None:
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", column=tok.column)


def parse_expression(text: str) -> Expression:
    """Parse a single arithmetic term (no comparator)."""
    p = _Parser(text)
    expr = p.parse_expr()
    p.expect_end()
    return expr


def parse_comparison(text: str) -> tuple[Expression, str, Expression]:
    """Parse ``term CMP term`` and return (lhs, comparator, rhs)."""
    p = _Parser(text)
    lhs = p.parse_expr()
    cmp = p.parse_comparator()
    rhs = p.parse_expr()
    p.expect_end()
    return lhs, cmp, rhs


# --------------------------------------------------------------------------
# printing


def _format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_text(expr: Expression, parent_prec: int = 0) -> str:
    """Render an expression; ``parse_expression(to_text(e))`` equals ``e``.

    Negative literals print through a Neg node, so the printed form always
    re-tokenizes the same way.
    """
    if isinstance(expr, Num):
        if expr.value < 0:
            return to_text(Neg(Num(-expr.value)), parent_prec)
        return _format_number(expr.value)
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Neg):
        inner = to_text(expr.operand, _UNARY)
        out = f"-{inner}"
        return f"({out})" if parent_prec > _UNARY else out
    if isinstance(expr, Call):
        return f"{expr.fn}({', '.join(to_text(a) for a in expr.args)})"
    prec = _BINARY_PREC[expr.op]
    left = to_text(expr.left, prec)
    # force parens on the right for non-associative re-parse fidelity,
    # except ^ which is right-associative
    right = to_text(expr.right, prec if expr.op == "^" else prec + 1)
    out = f"{left} {expr.op} {right}"
    return f"({out})" if prec < parent_prec else out


# --------------------------------------------------------------------------
# evaluation


def free_names(expr: Expression) -> set[str]:
    if isinstance(expr, Name):
        return {expr.ident}
    if isinstance(expr, Neg):
        return free_names(expr.operand)
    if isinstance(expr, BinOp):
        return free_names(expr.left) | free_names(expr.right)
    if isinstance(expr, Call):
        out: set[str] = set()
        for a in expr.args:
            out |= free_names(a)
        return out
    return set()


def coefficients_of(expr: Expression) -> set[str]:
    return {n for n in free_names(expr) if is_coefficient(n)}


def substitute(expr: Expression, bindings: Mapping[str, float]) -> Expression:
    """Replace named symbols by numeric constants."""
    if isinstance(expr, Name):
        if expr.ident in bindings:
            return const(bindings[expr.ident])
        return expr
    if isinstance(expr, Neg):
        return Neg(substitute(expr.operand, bindings))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, substitute(expr.left, bindings), substitute(expr.right, bindings))
    if isinstance(expr, Call):
        return Call(expr.fn, tuple(substitute(a, bindings) for a in expr.args))
    return expr


def _check_finite(value, context: str):
    if not np.all(np.isfinite(value)):
        raise NonEvaluableExpression(f"non-finite result in {context}")
    return value


def evaluate(expr: Expression, env: Mapping[str, "np.ndarray | float"]):
    """Evaluate over an environment of scalars or equally-shaped arrays.

    Raises NonEvaluableExpression for unknown names and for any step whose
    result is non-finite on at least one input point.
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Name):
        try:
            return env[expr.ident]
        except KeyError:
            raise NonEvaluableExpression(f"unknown symbol {expr.ident!r}") from None
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    with np.errstate(all="ignore"):
        if isinstance(expr, BinOp):
            left = evaluate(expr.left, env)
            right = evaluate(expr.right, env)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if expr.op == "/":
                return _check_finite(np.divide(left, right), "division")
            return _check_finite(np.power(left, right), "power")
        assert isinstance(expr, Call)
        args = [evaluate(a, env) for a in expr.args]
        fn, _, _ = _FUNCTIONS[expr.fn]
        if expr.fn in ("min", "max"):
            acc = args[0]
            for a in args[1:]:
                acc = fn(acc, a)
            return acc
        return _check_finite(fn(args[0]), expr.fn)
