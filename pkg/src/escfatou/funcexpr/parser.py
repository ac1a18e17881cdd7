"""Parser and printer for the function DSL.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/')? factor)*      # juxtaposition multiplies
    factor := '-' factor | base ('^' ['-'] integer)?
    base   := 'z' | number | 'i' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
            | '@' name                            # named sub-expression
    func   := 'exp' | 'sin' | 'cos'
"""

from __future__ import annotations

import math
import re

from .nodes import (FUNCTIONS, Add, Const, Cos, Div, Exp, Mul, Named, Neg, Pow, Sin,
                    Sub, Var)


class ParseError(ValueError):
    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<at>@[A-Za-z_][A-Za-z_0-9.\-]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)

CONSTANTS = {"pi": math.pi, "e": math.e, "i": 1j}


def _tokenize(text):
    pos = 0
    line, line_start = 1, 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            for k, ch in enumerate(tok):
                if ch == "\n":
                    line += 1
                    line_start = pos + k + 1
        else:
            out.append((kind, tok, line, col))
        pos = m.end()
    out.append(("end", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text, names):
        self.toks = _tokenize(text)
        self.k = 0
        self.names = names or {}

    @property
    def cur(self):
        return self.toks[self.k]

    def error(self, msg, tok=None):
        tok = tok or self.cur
        raise ParseError(msg, tok[2], tok[3])

    def take(self, value=None):
        tok = self.cur
        if value is not None and tok[1] != value:
            self.error(f"expected {value!r} but found {tok[1] or 'end of input'!r}")
        self.k += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.cur[0] != "end":
            self.error(f"unexpected {self.cur[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.cur[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def _starts_base(self):
        kind, tok = self.cur[0], self.cur[1]
        return kind in ("num", "ident", "at") or tok == "("

    def term(self):
        node = self.factor()
        while True:
            if self.cur[1] in ("*", "/"):
                op = self.take()[1]
                rhs = self.factor()
                node = Mul(node, rhs) if op == "*" else Div(node, rhs)
            elif self._starts_base():
                node = Mul(node, self.factor())
            else:
                return node

    def factor(self):
        if self.cur[1] == "-":
            self.take()
            return Neg(self.factor())
        node = self.base()
        if self.cur[1] == "^":
            self.take()
            sign = 1
            if self.cur[1] == "-":
                self.take()
                sign = -1
            tok = self.cur
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("exponent must be an integer")
            self.take()
            node = Pow(node, sign * int(tok[1]))
        return node

    def base(self):
        kind, tok, line, col = self.cur
        if kind == "num":
            self.take()
            return Const(complex(float(tok)))
        if kind == "at":
            self.take()
            name = tok[1:]
            if name not in self.names:
                raise ParseError(f"unknown named sub-expression {name!r}", line, col)
            return Named(name, self.names[name])
        if kind == "ident":
            self.take()
            if tok == "z":
                return Var()
            if tok in CONSTANTS:
                return Const(complex(CONSTANTS[tok]), tok)
            if tok in FUNCTIONS:
                if self.cur[1] != "(":
                    self.error(f"function {tok!r} expects one argument in parentheses")
                self.take("(")
                if self.cur[1] == ")":
                    self.error(f"arity mismatch: {tok!r} takes exactly 1 argument, got 0")
                arg = self.expr()
                if self.cur[1] == ",":
                    self.error(f"arity mismatch: {tok!r} takes exactly 1 argument")
                self.take(")")
                return FUNCTIONS[tok](arg)
            raise ParseError(f"unknown identifier {tok!r}", line, col)
        if tok == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        self.error(f"unexpected {tok or 'end of input'!r}")


def parse_tree(text, names=None):
    return _Parser(text, names).parse()


# -- printing ------------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _num(x: float) -> str:
    r = repr(float(x))
    return r if x >= 0 else f"({r})"


def _const(c: Const) -> str:
    if c.name is not None:
        return c.name
    v = complex(c.value)
    if v.imag == 0:
        return _num(v.real)
    if v.real == 0:
        return f"({repr(v.imag)}*i)"
    return f"({repr(v.real)}+{repr(v.imag)}*i)"


def to_text(node) -> str:
    """Serialise a tree back to DSL text (re-parses to an equal tree)."""
    def wrap(child, prec, right=False):
        s = to_text(child)
        p = _PREC.get(type(child), 5)
        if p < prec or (right and p == prec and prec in (1, 2)):
            return f"({s})"
        return s

    if isinstance(node, Var):
        return "z"
    if isinstance(node, Const):
        return _const(node)
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, 4)
    if isinstance(node, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        p = _PREC[type(node)]
        return f"{wrap(node.left, p)}{op}{wrap(node.right, p, right=True)}"
    if isinstance(node, Pow):
        return f"{wrap(node.base, 5)}^{node.exponent}" if node.exponent >= 0 else \
            f"{wrap(node.base, 5)}^-{-node.exponent}"
    if isinstance(node, (Exp, Sin, Cos)):
        name = {Exp: "exp", Sin: "sin", Cos: "cos"}[type(node)]
        return f"{name}({to_text(node.arg)})"
    if isinstance(node, Named):
        return "@" + node.name
    raise TypeError(f"unknown node {node!r}")
