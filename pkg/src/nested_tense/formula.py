"""Formulas of the tense language: syntax trees, parser, printer and metrics.

The ASCII surface syntax is

    formula := imp
    imp     := or ("->" imp)?
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := ("dia" | "bdia" | "box" | "bbox" | "~") unary
             | atom | "false" | "(" formula ")"

``~A`` is shorthand for ``A -> false``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator, Union


class Direction(Enum):
    """Edge direction of a nesting: forward ``f`` or backward ``b``."""

    F = "f"
    B = "b"

    @property
    def converse(self) -> Direction:
        return Direction.B if self is Direction.F else Direction.F

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Dia:
    body: Formula


@dataclass(frozen=True)
class BDia:
    body: Formula


@dataclass(frozen=True)
class Box:
    body: Formula


@dataclass(frozen=True)
class BBox:
    body: Formula


Formula = Union[Atom, Bottom, And, Or, Imp, Dia, BDia, Box, BBox]

BOT = Bottom()

_BINARY = (And, Or, Imp)
_DIAMONDS = {Direction.F: Dia, Direction.B: BDia}
_BOXES = {Direction.F: Box, Direction.B: BBox}


def neg(a: Formula) -> Formula:
    return Imp(a, BOT)


def diamond(d: Direction, body: Formula) -> Formula:
    """The diamond pointing along ``d``."""
    return _DIAMONDS[d](body)


def box(d: Direction, body: Formula) -> Formula:
    """The box pointing along ``d``."""
    return _BOXES[d](body)


def diamond_direction(a: Formula) -> Direction | None:
    if isinstance(a, Dia):
        return Direction.F
    if isinstance(a, BDia):
        return Direction.B
    return None


def box_direction(a: Formula) -> Direction | None:
    if isinstance(a, Box):
        return Direction.F
    if isinstance(a, BBox):
        return Direction.B
    return None


# ---------------------------------------------------------------- printing

_UNARY_KW = {Dia: "dia", BDia: "bdia", Box: "box", BBox: "bbox"}
_PREC = {Imp: 1, Or: 2, And: 3}
_OPS = {Imp: "->", Or: "|", And: "&"}


def _prec(a: Formula) -> int:
    return _PREC.get(type(a), 4)


@lru_cache(maxsize=None)
def render(a: Formula) -> str:
    """Render with the fewest parentheses that still parse back to ``a``."""
    if isinstance(a, Atom):
        return a.name
    if isinstance(a, Bottom):
        return "false"
    kw = _UNARY_KW.get(type(a))
    if kw is not None:
        body = render(a.body)
        if _prec(a.body) < 4:
            body = f"({body})"
        return f"{kw} {body}"
    p = _prec(a)
    left, right = render(a.left), render(a.right)
    if isinstance(a, Imp):
        # right-associative
        if _prec(a.left) <= p:
            left = f"({left})"
        if _prec(a.right) < p:
            right = f"({right})"
    else:
        # left-associative
        if _prec(a.left) < p:
            left = f"({left})"
        if _prec(a.right) <= p:
            right = f"({right})"
    return f"{left} {_OPS[type(a)]} {right}"


_RANK = {Box: 0, BBox: 1, Imp: 2, Dia: 3, BDia: 4, Or: 5, And: 6, Atom: 7, Bottom: 8}


@lru_cache(maxsize=None)
def formula_key(a: Formula) -> tuple[int, str]:
    """Canonical total order on formulas.

    Boxes come first, then implications, so that the disjunctive branching
    premises at one vertex are listed as box, backward box, implication.
    """
    return (_RANK[type(a)], render(a))


# ----------------------------------------------------------------- parsing


class ParseError(ValueError):
    """Malformed input; ``pos`` is the character offset of the problem."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>\|-|->|[|&~(),\[\]])|(?P<name>@\d+|[a-z][a-z0-9_]*)|(?P<bad>\S))"
)
KEYWORDS = frozenset({"dia", "bdia", "box", "bbox", "false"})


@dataclass(frozen=True)
class Token:
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            break
        if m.group("bad") is not None:
            raise ParseError(f"unexpected character {m.group('bad')!r}", m.start("bad"))
        kind = "op" if m.group("op") is not None else "name"
        tokens.append(Token(m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class TokenStream:
    """Cursor over a token list, shared by the formula and sequent parsers."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> str | None:
        j = self.i + offset
        return self.tokens[j].text if j < len(self.tokens) else None

    @property
    def pos(self) -> int:
        return self.tokens[self.i].pos if self.i < len(self.tokens) else len(self.text)

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos)
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        if self.peek() != text:
            found = self.peek()
            what = "end of input" if found is None else repr(found)
            raise ParseError(f"expected {text!r}, found {what}", self.pos)
        self.i += 1

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def formula(self) -> Formula:
        left = self._or()
        if self.peek() == "->":
            self.i += 1
            return Imp(left, self.formula())
        return left

    def _or(self) -> Formula:
        a = self._and()
        while self.peek() == "|":
            self.i += 1
            a = Or(a, self._and())
        return a

    def _and(self) -> Formula:
        a = self._unary()
        while self.peek() == "&":
            self.i += 1
            a = And(a, self._unary())
        return a

    def _unary(self) -> Formula:
        pos = self.pos
        tok = self.next()
        if tok == "~":
            return neg(self._unary())
        if tok in ("dia", "bdia", "box", "bbox"):
            body = self._unary()
            return {"dia": Dia, "bdia": BDia, "box": Box, "bbox": BBox}[tok](body)
        if tok == "false":
            return BOT
        if tok == "(":
            a = self.formula()
            self.expect(")")
            return a
        if re.fullmatch(r"[a-z][a-z0-9_]*", tok):
            return Atom(tok)
        raise ParseError(f"unexpected token {tok!r}", pos)


def parse(text: str) -> Formula:
    """Parse a formula, raising ParseError on malformed input."""
    ts = TokenStream(text)
    a = ts.formula()
    if not ts.at_end():
        raise ParseError(f"unexpected token {ts.peek()!r}", ts.pos)
    return a


# ----------------------------------------------------------------- metrics


def immediate_subformulas(a: Formula) -> tuple[Formula, ...]:
    if isinstance(a, _BINARY):
        return (a.left, a.right)
    if isinstance(a, (Dia, BDia, Box, BBox)):
        return (a.body,)
    return ()


def iter_subformulas(a: Formula) -> Iterator[Formula]:
    stack = [a]
    while stack:
        b = stack.pop()
        yield b
        stack.extend(immediate_subformulas(b))


def subformulas(a: Formula) -> frozenset[Formula]:
    return frozenset(iter_subformulas(a))


@lru_cache(maxsize=None)
def modal_depth(a: Formula) -> int:
    if isinstance(a, _BINARY):
        return max(modal_depth(a.left), modal_depth(a.right))
    if isinstance(a, (Dia, BDia, Box, BBox)):
        return modal_depth(a.body) + 1
    return 0


def formula_length(a: Formula) -> int:
    """Number of symbols, parentheses not counted."""
    return sum(1 for _ in iter_subformulas(a))


def atoms(a: Formula) -> frozenset[str]:
    return frozenset(b.name for b in iter_subformulas(a) if isinstance(b, Atom))
