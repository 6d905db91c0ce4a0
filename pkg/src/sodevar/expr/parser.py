"""Pratt parser for the coefficient DSL.

Grammar (loosest to tightest): ``+ -`` < ``* /`` < unary minus < ``^``
(right associative, integer exponent), so ``-y1^2`` means ``-(y1^2)`` and
``2^-1`` is one half.  Identifiers are ``t``, ``x<i>``, ``y<i>`` and the
functions sin, cos, exp, ln, sqrt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    FUNCTIONS,
    MAX_EXPONENT,
    Add,
    Const,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Var,
    VarId,
    as_rational,
    simplify,
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        self.message = message
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownIdentifierError(ParseError):
    pass


class IndexOutOfRangeError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, lpar, rpar, end
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^])|(?P<lpar>\()|(?P<rpar>\)))"
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        if tok == "**":
            tok = "^"
        tokens.append(Token(kind, tok, start))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


_INFIX_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
# a leading sign takes a full power as its operand
_PREFIX_BP = 30
_VAR_RE = re.compile(r"([xy])([1-9]\d*)$")


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok: Token, cls=ParseError):
        raise cls(msg, self.text, tok.pos)

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            self.error("empty expression", self.peek())
        e = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            self.error(f"unexpected {tok.text!r}", tok)
        return e

    def expression(self, min_bp: int) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op":
                if tok.kind in ("num", "name", "lpar"):
                    self.error(f"missing operator before {tok.text!r}", tok)
                return left
            bp = _INFIX_BP[tok.text]
            if bp < min_bp or (bp == min_bp and tok.text != "^"):
                return left
            self.next()
            if tok.text == "^":
                # right associative: the exponent may itself contain ^
                exponent = self.expression(bp)
                left = Pow(left, self.integer_exponent(exponent, tok))
            else:
                right = self.expression(bp + 1)
                left = self.combine(tok.text, left, right)

    def combine(self, op: str, a: Expr, b: Expr) -> Expr:
        if op == "+":
            return Add((a, b))
        if op == "-":
            return Add((a, Neg(b)))
        if op == "*":
            return Mul((a, b))
        return Div(a, b)

    def integer_exponent(self, e: Expr, tok: Token) -> int:
        q = as_rational(simplify(e))
        if q is None or q.denominator != 1:
            self.error("exponent must be an integer constant", tok)
        if abs(q) > MAX_EXPONENT:
            self.error(f"exponent exceeds {MAX_EXPONENT}", tok)
        return int(q)

    def prefix(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return Const(Fraction(tok.text))
        if tok.kind == "op" and tok.text in "+-":
            arg = self.expression(_PREFIX_BP)
            return Neg(arg) if tok.text == "-" else arg
        if tok.kind == "lpar":
            e = self.expression(0)
            close = self.next()
            if close.kind != "rpar":
                self.error("expected ')'", close)
            return e
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "end":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected {tok.text!r}", tok)

    def name(self, tok: Token) -> Expr:
        word = tok.text
        if word in FUNCTIONS:
            if self.peek().kind != "lpar":
                self.error(f"function {word} needs an argument in parentheses", self.peek())
            self.next()
            arg = self.expression(0)
            close = self.next()
            if close.kind != "rpar":
                self.error("expected ')'", close)
            return Func(word, arg)
        if word == "t":
            return Var(VarId.t())
        m = _VAR_RE.match(word)
        if m is None:
            self.error(f"unknown identifier {word!r}", tok, UnknownIdentifierError)
        idx = int(m.group(2))
        if idx > self.n:
            self.error(f"index {idx} of {word!r} exceeds n={self.n}", tok, IndexOutOfRangeError)
        return Var(VarId(m.group(1).upper(), idx))


def parse_raw(text: str, n: int) -> Expr:
    """Parse ``text`` into an unsimplified tree."""
    if n < 1:
        raise ValueError("dimension n must be at least 1")
    return _Parser(text, n).parse()


def parse(text: str, n: int) -> Expr:
    """Parse ``text`` and return its canonical form."""
    return simplify(parse_raw(text, n))
