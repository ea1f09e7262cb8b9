"""Parser for the expression DSL.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := primary ('^' unary)?          # exponent must be an integer constant
    primary := NUMBER | '(' expr ')' | FUNC '(' expr ')'
             | VAR ('[' INT (',' INT)* ']')? | BASE | CONST
    FUNC    := sin | cos | exp | ln
    VAR     := a declared variable name (offset defaults to all zeros)
    BASE    := n1 .. np
    CONST   := any other identifier (kept symbolic)
    NUMBER  := digits with an optional decimal part, read as an exact rational

So ``u[1,0]`` is u_{1,0}, ``v[-1,2]`` is the second variable shifted by (-1, 2), and
``3/2*u^2`` has the rational coefficient 3/2.  ``**`` is accepted as a synonym of ``^``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from .expr import FUNCTIONS, Expr, apply_function
from .signature import Signature


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.message = message
        super().__init__(f"line {self.line}, column {self.column}: {message}")


class Token(NamedTuple):
    kind: str
    value: str
    pos: int


_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()\[\],])"
)
_BASE = re.compile(r"n([0-9]+)$")


def tokenize(text: str) -> list:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            out.append(Token("op" if kind == "op" else kind, "^" if val == "**" else val, pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.toks = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> Token:
        t = self.take()
        if t.value != value:
            found = "end of input" if t.kind == "end" else repr(t.value)
            raise ParseError(f"expected {value!r}, found {found}", self.text, t.pos)
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok.pos)

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            self.error("empty expression")
        e = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected {self.peek().value!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().value in ("+", "-"):
            op = self.take().value
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().value in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.value == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    self.error("division by zero", op)
                e = e / rhs
        return e

    def unary(self) -> Expr:
        if self.peek().value in ("+", "-"):
            op = self.take().value
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self) -> Expr:
        e = self.primary()
        if self.peek().value == "^":
            tok = self.take()
            ex = self.unary()
            if not ex.is_constant() or ex.constant_value().denominator != 1:
                self.error("exponent must be an integer constant", tok)
            n = int(ex.constant_value())
            if n < 0 and e.is_zero():
                self.error("zero raised to a negative power", tok)
            e = e ** n
        return e

    def primary(self) -> Expr:
        t = self.take()
        if t.kind == "num":
            return Expr.const(Fraction(t.value))
        if t.value == "(":
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "name":
            found = "end of input" if t.kind == "end" else repr(t.value)
            self.error(f"expected a number, name or '(', found {found}", t)
        name = t.value
        if name in FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            try:
                return apply_function(name, arg)
            except ValueError as exc:
                self.error(str(exc), t)
        if name in self.sig.names:
            alpha = self.sig.index_of(name)
            offset = (0,) * self.sig.p
            if self.peek().value == "[":
                open_tok = self.take()
                entries = [self.signed_int()]
                while self.peek().value == ",":
                    self.take()
                    entries.append(self.signed_int())
                self.expect("]")
                if len(entries) != self.sig.p:
                    self.error(f"offset of {name} has {len(entries)} entries, expected p={self.sig.p}", open_tok)
                offset = tuple(entries)
            return Expr.fiber(alpha, offset)
        m = _BASE.match(name)
        if m:
            i = int(m.group(1))
            if not 1 <= i <= self.sig.p:
                self.error(f"base coordinate {name} out of range 1..{self.sig.p}", t)
            return Expr.base(i - 1)
        if self.peek().value == "[":
            self.error(f"undeclared variable {name!r} (declared: {', '.join(self.sig.names)})", t)
        if self.peek().value == "(":
            self.error(f"unknown function {name!r}", t)
        return Expr.named(name)

    def signed_int(self) -> int:
        sign = 1
        while self.peek().value in ("+", "-"):
            if self.take().value == "-":
                sign = -sign
        t = self.take()
        if t.kind != "num" or not t.value.isdigit():
            self.error("expected an integer offset", t)
        return sign * int(t.value)


def parse(text: str, sig: Signature) -> Expr:
    """Parse a DSL string into a normalized :class:`Expr` in the signature ``sig``."""
    if not isinstance(text, str):
        if isinstance(text, int):
            return Expr.const(text)
        raise TypeError(f"expected an expression string, got {type(text).__name__}")
    return _Parser(text, sig).parse()
