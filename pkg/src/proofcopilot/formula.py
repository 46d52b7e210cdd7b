r"""Propositional formula language: AST, parser and printer.

The surface grammar, tightest first:

    ~ F            negation        (sugar for F -> False)
    F /\ G         conjunction
    F \/ G         disjunction
    F -> G         implication     (right associative)
    F <-> G        equivalence     (sugar for (F -> G) /\ (G -> F))

All binary connectives associate to the right. `~` and `<->` are
abbreviations eliminated at parse time, so the AST has exactly six node
shapes and the printer only ever emits the four core connectives.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError


class Formula:
    """Base class for formula nodes. All instances are immutable."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Truth(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Falsity(Formula):
    pass


@dataclass(frozen=True, slots=True)
class And(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    lhs: Formula
    rhs: Formula


TRUTH = Truth()
FALSITY = Falsity()


def neg(f: Formula) -> Formula:
    """The negation abbreviation: ~f is f -> False."""
    return Imp(f, FALSITY)


def atoms(f: Formula) -> frozenset[str]:
    """Set of atom names occurring in f."""
    out: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.add(node.name)
        elif isinstance(node, (And, Or, Imp)):
            stack.append(node.lhs)
            stack.append(node.rhs)
    return frozenset(out)


def size(f: Formula) -> int:
    """Node count of the AST (leaves count 1, connectives 1 + children)."""
    total = 0
    stack = [f]
    while stack:
        node = stack.pop()
        total += 1
        if isinstance(node, (And, Or, Imp)):
            stack.append(node.lhs)
            stack.append(node.rhs)
    return total


# ---------------------------------------------------------------------------
# Tokenizer


_SYMBOLS = (
    ("<->", "IFF"),
    ("->", "ARROW"),
    ("/\\", "AND"),
    ("\\/", "OR"),
    ("~", "NOT"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
)


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, line: int = 1, column: int = 1) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            column = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            column += 1
            continue
        matched = False
        for sym, kind in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token(kind, sym, line, column))
                i += len(sym)
                column += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "True":
                tokens.append(_Token("TRUE", word, line, column))
            elif word == "False":
                tokens.append(_Token("FALSE", word, line, column))
            else:
                tokens.append(_Token("IDENT", word, line, column))
            column += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, column)
    tokens.append(_Token("EOF", "", line, column))
    return tokens


# ---------------------------------------------------------------------------
# Parser


_ATOM_STARTERS = ("an atom", "'True'", "'False'", "'~'", "'('")


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: tuple[str, ...]) -> ParseError:
        tok = self.peek()
        what = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ParseError(f"unexpected {what}", tok.line, tok.column, expected)

    def formula(self) -> Formula:
        left = self.implication()
        if self.peek().kind == "IFF":
            self.advance()
            right = self.formula()
            return And(Imp(left, right), Imp(right, left))
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "ARROW":
            self.advance()
            return Imp(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        if self.peek().kind == "OR":
            self.advance()
            return Or(left, self.disjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        if self.peek().kind == "AND":
            self.advance()
            return And(left, self.conjunction())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "NOT":
            self.advance()
            return Imp(self.unary(), FALSITY)
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return Atom(tok.text)
        if tok.kind == "TRUE":
            self.advance()
            return TRUTH
        if tok.kind == "FALSE":
            self.advance()
            return FALSITY
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.formula()
            if self.peek().kind != "RPAREN":
                raise self.fail(("')'",))
            self.advance()
            return inner
        raise self.fail(_ATOM_STARTERS)


def parse_formula(text: str, *, line: int = 1, column: int = 1) -> Formula:
    """Parse a formula, raising ParseError with 1-based position on failure.

    line/column give the position of the first character of `text` inside a
    larger document, so errors from embedded formulas point at the document.
    """
    parser = _Parser(_tokenize(text, line, column))
    result = parser.formula()
    if parser.peek().kind != "EOF":
        raise parser.fail(("a connective", "end of formula"))
    return result


# ---------------------------------------------------------------------------
# Printer

# Binding levels for the minimal-parenthesis printer. A child is wrapped
# exactly when its level is below the minimum its position requires, which
# for right-associative connectives means the left child needs one level
# more than the right.

_LEVEL_IMP = 1
_LEVEL_OR = 2
_LEVEL_AND = 3
_LEVEL_ATOM = 4


def _level(f: Formula) -> int:
    if isinstance(f, Imp):
        return _LEVEL_IMP
    if isinstance(f, Or):
        return _LEVEL_OR
    if isinstance(f, And):
        return _LEVEL_AND
    return _LEVEL_ATOM


def _render(f: Formula, min_level: int) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Truth):
        return "True"
    if isinstance(f, Falsity):
        return "False"
    if isinstance(f, Imp):
        body = f"{_render(f.lhs, _LEVEL_IMP + 1)} -> {_render(f.rhs, _LEVEL_IMP)}"
    elif isinstance(f, Or):
        body = f"{_render(f.lhs, _LEVEL_OR + 1)} \\/ {_render(f.rhs, _LEVEL_OR)}"
    elif isinstance(f, And):
        body = f"{_render(f.lhs, _LEVEL_AND + 1)} /\\ {_render(f.rhs, _LEVEL_AND)}"
    else:
        raise TypeError(f"not a formula: {f!r}")
    if _level(f) < min_level:
        return f"({body})"
    return body


def pretty(f: Formula) -> str:
    """Render f with the fewest parentheses that parse back to f."""
    return _render(f, _LEVEL_IMP)
