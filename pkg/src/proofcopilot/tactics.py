"""Tactic names, scripts, and the script parser/printer.

A script is a sequence of steps separated by newlines or `;`. Blank lines
and `--` line comments are ignored. Each step is a keyword plus, for
intro/exact/apply/cases, exactly one argument: a binder name for intro, a
hypothesis or lemma reference for the others. References may carry dotted
segments (`h.1`, `h.2.1`) as produced by cases.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ParseError


class TacticKind(Enum):
    INTRO = "intro"
    EXACT = "exact"
    ASSUMPTION = "assumption"
    APPLY = "apply"
    SPLIT = "split"
    LEFT = "left"
    RIGHT = "right"
    CASES = "cases"
    TRIVIAL = "trivial"
    EXFALSO = "exfalso"
    CONTRADICTION = "contradiction"
    SORRY = "sorry"


ARG_KINDS = frozenset({TacticKind.INTRO, TacticKind.EXACT, TacticKind.APPLY, TacticKind.CASES})

_KEYWORDS = {kind.value: kind for kind in TacticKind}

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_REF_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z0-9_]+)*")


@dataclass(frozen=True, slots=True)
class Tactic:
    kind: TacticKind
    arg: str | None = None

    def __post_init__(self) -> None:
        if self.kind in ARG_KINDS:
            if not self.arg:
                raise ValueError(f"{self.kind.value} requires an argument")
        elif self.arg is not None:
            raise ValueError(f"{self.kind.value} takes no argument")


def render_tactic(t: Tactic) -> str:
    if t.arg is None:
        return t.kind.value
    return f"{t.kind.value} {t.arg}"


@dataclass(frozen=True, slots=True)
class TacticScript:
    """Parsed steps plus the 1-based (line, column) where each step starts."""

    steps: tuple[Tactic, ...]
    spans: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.spans and len(self.spans) != len(self.steps):
            raise ValueError("one span per step")


def script_from_tactics(tactics) -> TacticScript:
    """Wrap a tactic sequence as a script with synthetic one-per-line spans."""
    steps = tuple(tactics)
    return TacticScript(steps, tuple((i + 1, 1) for i in range(len(steps))))


def render_script(script: TacticScript) -> str:
    """One step per line; parse_script of the result yields the same steps."""
    return "\n".join(render_tactic(t) for t in script.steps)


def _parse_step(piece: str, line: int, column: int) -> Tactic:
    """Parse one step. column is the 1-based column of piece[0]."""
    m = _NAME_RE.match(piece)
    if m is None:
        raise ParseError(f"unexpected {piece[0]!r}", line, column, ("a tactic name",))
    word = m.group(0)
    kind = _KEYWORDS.get(word)
    if kind is None:
        raise ParseError(f"unknown tactic {word!r}", line, column)
    rest = piece[m.end():]
    rest_col = column + m.end()
    stripped = rest.lstrip()
    rest_col += len(rest) - len(stripped)
    if kind not in ARG_KINDS:
        if stripped:
            raise ParseError(
                f"{word} takes no argument", line, rest_col, ("';'", "end of line")
            )
        return Tactic(kind)
    if not stripped:
        raise ParseError(f"{word} requires an argument", line, rest_col, ("a name",))
    ref_re = _NAME_RE if kind is TacticKind.INTRO else _REF_RE
    m2 = ref_re.match(stripped)
    if m2 is None or m2.start() != 0:
        raise ParseError(f"unexpected {stripped[0]!r}", line, rest_col, ("a name",))
    trailing = stripped[m2.end():].strip()
    if trailing:
        raise ParseError(
            f"unexpected text after {word} argument: {trailing!r}",
            line,
            rest_col + m2.end(),
            ("';'", "end of line"),
        )
    return Tactic(kind, m2.group(0))


def parse_script_offsets(
    text: str, first_line: int = 1
) -> tuple[TacticScript, tuple[tuple[int, int], ...]]:
    """parse_script plus each step's (start, end) character offsets in text.

    The offsets cover the step's token text exactly: from the first character
    of the keyword through the last character of its argument, comments and
    surrounding whitespace excluded. Corpus tooling converts these into file
    byte ranges.
    """
    steps: list[Tactic] = []
    spans: list[tuple[int, int]] = []
    offsets: list[tuple[int, int]] = []
    pos = 0
    for line_index, raw_line in enumerate(text.split("\n")):
        line_no = first_line + line_index
        comment = raw_line.find("--")
        content = raw_line if comment < 0 else raw_line[:comment]
        cursor = 0
        for piece in content.split(";"):
            stripped = piece.strip()
            lead = len(piece) - len(piece.lstrip())
            if stripped:
                col = cursor + lead + 1
                step = _parse_step(stripped, line_no, col)
                steps.append(step)
                spans.append((line_no, col))
                start = pos + cursor + lead
                offsets.append((start, start + len(stripped)))
            cursor += len(piece) + 1
        pos += len(raw_line) + 1
    return TacticScript(tuple(steps), tuple(spans)), tuple(offsets)


def parse_script(text: str, first_line: int = 1) -> TacticScript:
    """Parse a script; spans report where each step starts, 1-based."""
    script, _ = parse_script_offsets(text, first_line)
    return script
