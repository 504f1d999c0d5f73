"""Small expression language for charts, metrics and lagrangians.

Grammar (whitespace insignificant, no implicit multiplication):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?          # '^' right-associative
    unary  := '-' unary | atom
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Unary minus binds tighter than '^', so ``-x1^2`` parses as ``(-x1)^2``.
Functions are frozen to the scalar-kernel set; constants are ``pi`` and
``e``.  Variable names follow the coordinate grammar ``u<i>``, ``x<i>``,
``y<k>_<i>``, ``p_<i>`` with 1-based indices.

Programs are immutable once parsed; evaluation is a pure function of the
environment and works uniformly over plain floats, TaylorScalars and dual
scalars.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Mapping

from . import scalars
from .errors import ExprSyntaxError, UnboundVariable, UnknownFunction

__all__ = [
    "ExprProgram",
    "parse",
    "free_variables",
    "Num",
    "Var",
    "Const",
    "Unary",
    "Binary",
    "Call",
    "VARIABLE_NAME",
    "is_variable_name",
]

VARIABLE_NAME = re.compile(
    r"^(u[1-9][0-9]*|x[1-9][0-9]*|y[1-9][0-9]*_[1-9][0-9]*|p_[1-9][0-9]*)$"
)

CONSTANTS = {"pi": math.pi, "e": math.e}

FUNCTIONS = frozenset(
    ["exp", "log", "sin", "cos", "tan", "sqrt", "atan", "neg"]
)


def is_variable_name(name: str) -> bool:
    return VARIABLE_NAME.match(name) is not None


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    arg: Any


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: Any
    right: Any


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Any


# -- tokenizer --------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group(0)
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        tok = self.peek()
        got = repr(tok.text) if tok.kind != "end" else "end of input"
        raise ExprSyntaxError(f"expected {expected}, got {got}", tok.line, tok.column)

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            return self.advance()
        self.fail(f"{op!r}")

    def parse(self):
        node = self.expr()
        if self.peek().kind != "end":
            self.fail("end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        node = self.unary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            node = Binary("^", node, self.factor())  # right-associative
        return node

    def unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Unary("-", self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunction(
                        f"unknown function {tok.text!r}", tok.line, tok.column
                    )
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if not is_variable_name(tok.text):
                raise ExprSyntaxError(
                    f"unknown variable name {tok.text!r}", tok.line, tok.column
                )
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail("a number, name or '('")


# -- evaluation and printing -------------------------------------------------


def _eval(node, env: Mapping[str, Any]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariable(node.name) from None
    if isinstance(node, Unary):
        return -_eval(node.arg, env)
    if isinstance(node, Call):
        return scalars.UNARY_FUNCTIONS[node.fn](_eval(node.arg, env))
    if isinstance(node, Binary):
        left = _eval(node.left, env)
        if node.op == "^":
            # integer literal exponents keep negative bases legal
            if isinstance(node.right, Num) and float(node.right.value).is_integer():
                n = int(node.right.value)
                if isinstance(left, (scalars.TaylorScalar, scalars.DualScalar,
                                     scalars.DualQuadScalar)):
                    return left ** n
                return scalars.power(left, n)
            return scalars.power(left, _eval(node.right, env))
        right = _eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return scalars._div(left, right)
    raise TypeError(f"unknown AST node {node!r}")


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _print(node, parent_prec=0) -> str:
    if isinstance(node, Num):
        v = node.value
        text = repr(int(v)) if v.is_integer() and abs(v) < 1e16 else repr(v)
        if v < 0:
            return f"({text})" if parent_prec > 0 else text
        return text
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg)})"
    if isinstance(node, Unary):
        inner = _print(node.arg, 4)
        text = f"-{inner}"
        return f"({text})" if parent_prec >= 1 else text
    if isinstance(node, Binary):
        prec = _PRECEDENCE[node.op]
        left = _print(node.left, prec)
        # right operand needs a bump for left-associative ops
        right = _print(node.right, prec if node.op == "^" else prec + 1)
        text = f"{left} {node.op} {right}" if node.op in "+-" else f"{left}{node.op}{right}"
        return f"({text})" if parent_prec > prec or (node.op == "^" and parent_prec == prec) else text
    raise TypeError(f"unknown AST node {node!r}")


def _collect_vars(node, out: set):
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Unary):
        _collect_vars(node.arg, out)
    elif isinstance(node, Call):
        _collect_vars(node.arg, out)
    elif isinstance(node, Binary):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)


@dataclass(frozen=True)
class ExprProgram:
    """A parsed, immutable expression."""

    ast: Any
    source: str

    def eval(self, env: Mapping[str, Any]):
        result = _eval(self.ast, env)
        if isinstance(result, (int, float)) and env:
            # literal-only programs should still come back in the env's kind
            for sample in env.values():
                if not isinstance(sample, (int, float)):
                    return scalars.constant_like(sample, result)
                break
        return result

    def free_variables(self) -> frozenset:
        out: set = set()
        _collect_vars(self.ast, out)
        return frozenset(out)

    def to_text(self) -> str:
        return _print(self.ast)

    def __str__(self):
        return self.to_text()


def parse(text: str) -> ExprProgram:
    """Parse expression text into an immutable program."""
    return ExprProgram(_Parser(text).parse(), text)


def free_variables(program: ExprProgram) -> frozenset:
    return program.free_variables()
