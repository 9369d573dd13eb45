"""Tiny expression language for regime functions of one variable ``x``.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | number | 'x' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'tanh' | 'exp' | 'abs'

Compiled trees evaluate elementwise on numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
    "abs": np.abs,
}
_OPS = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/(),]))"
)


class Node:
    prec = 4

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Node):
    value: float

    def __call__(self, x):
        return np.full(np.shape(x), self.value)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Node):
    def __call__(self, x):
        return np.asarray(x, dtype=float)

    def __str__(self):
        return "x"


@dataclass(frozen=True)
class Neg(Node):
    operand: Node
    prec = 3

    def __call__(self, x):
        return np.negative(self.operand(x))

    def __str__(self):
        inner = str(self.operand)
        return f"-({inner})" if self.operand.prec < self.prec else f"-{inner}"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    @property
    def prec(self):
        return _PREC[self.op]

    def __call__(self, x):
        return _OPS[self.op](self.left(x), self.right(x))

    def __str__(self):
        left = str(self.left)
        if self.left.prec < self.prec:
            left = f"({left})"
        right = str(self.right)
        # left associative: equal precedence on the right needs brackets
        if self.right.prec <= self.prec:
            right = f"({right})"
        return f"{left} {self.op} {right}"


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node

    def __call__(self, x):
        return FUNCTIONS[self.name](self.arg(x))

    def __str__(self):
        return f"{self.name}({self.arg})"


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, text, pos = self.take()
        if kind == "op" and text == "-":
            return Neg(self.factor())
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text not in FUNCTIONS:
                raise ExpressionError(f"unknown identifier {text!r}", pos)
            if self.peek()[1] != "(":
                raise ExpressionError(f"function {text!r} takes exactly one argument in parentheses", pos)
            self.take()
            arg = self.expr()
            if self.peek()[1] == ",":
                raise ExpressionError(f"function {text!r} takes exactly one argument", self.peek()[2])
            self.expect(")")
            return Call(text, arg)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {found}", pos)


@dataclass(frozen=True)
class RegimeFunction:
    """A parsed regime function; call it with a scalar or an array."""

    source: str
    tree: Node

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self.tree(x)
        return out[()] if out.ndim == 0 else out

    def pretty(self) -> str:
        return str(self.tree)

    def __str__(self):
        return self.source


def parse_regime_expression(text: str) -> RegimeFunction:
    return RegimeFunction(text, _Parser(text).parse())
