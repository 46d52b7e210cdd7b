"""Theorem file parsing, library loading, and ground-truth replay.

A `.thy` file holds import lines, then lemma and theorem declarations:

    import logic.base

    lemma and_swap : A /\\ B -> B /\\ A
    doc "Conjunction commutes."

    theorem demo : A -> A
    proof
      intro h
      exact h
    end

Line comments start with `--`. The module name is the file stem. Every
theorem's proof body span, and each step inside it, is recorded as a
byte range into the original text so tools that rewrite proofs can
splice text without touching the rest of the file. The renderer emits a
canonical layout; parsing its output and rendering again is the
identity, which is also how the shipped corpus files are formatted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    DuplicateNameError,
    InvalidPrefixError,
    NoGoalsError,
    ParseError,
    TacticError,
    UnknownTheoremError,
)
from .formula import Formula, parse_formula, pretty
from .kernel import (
    OutcomeStatus,
    ProofOutcome,
    ProofState,
    Sequent,
    apply_tactic,
    run_script,
)
from .premises import PremiseRecord
from .tactics import TacticScript, parse_script_offsets, render_tactic

_IMPORT_RE = re.compile(r"^import\s+([A-Za-z_][\w]*(?:\.[A-Za-z_][\w]*)*)\s*$")
_DECL_RE = re.compile(r"^(lemma|theorem)\s+([A-Za-z_][\w']*)\s*:\s*(.*)$")
_DOC_RE = re.compile(r"^doc\s+(\".*\")\s*$")


@dataclass(frozen=True, slots=True)
class TheoremEntry:
    """A theorem with its ground-truth script and byte-exact locations."""

    name: str
    statement: Formula
    script: TacticScript
    span: tuple[int, int]
    step_spans: tuple[tuple[int, int], ...]

    def goal(self) -> Sequent:
        return Sequent((), self.statement)


@dataclass(frozen=True, slots=True)
class CorpusFile:
    path: str
    module: str
    imports: tuple[str, ...]
    lemmas: tuple[PremiseRecord, ...]
    theorems: tuple[TheoremEntry, ...]
    text: str

    def scope_modules(self) -> tuple[str, ...]:
        """Modules whose lemmas the file's proofs may reference."""
        return (self.module, *self.imports)


class LemmaTable(Mapping[str, Formula]):
    """Ordered name → formula map that remembers each lemma's module."""

    __slots__ = ("_formulas", "_modules")

    def __init__(self, entries: Iterable[tuple[str, Formula, str]] = ()) -> None:
        self._formulas: dict[str, Formula] = {}
        self._modules: dict[str, str] = {}
        for name, formula, module in entries:
            if name in self._formulas:
                raise DuplicateNameError(
                    f"lemma {name!r} declared in both "
                    f"{self._modules[name]!r} and {module!r}"
                )
            self._formulas[name] = formula
            self._modules[name] = module

    def __getitem__(self, name: str) -> Formula:
        return self._formulas[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._formulas)

    def __len__(self) -> int:
        return len(self._formulas)

    def __repr__(self) -> str:
        return f"LemmaTable({list(self._formulas)!r})"

    def module_of(self, name: str) -> str:
        return self._modules[name]

    def restricted_to(self, modules: Iterable[str]) -> "LemmaTable":
        keep = frozenset(modules)
        return LemmaTable(
            (name, self._formulas[name], self._modules[name])
            for name in self._formulas
            if self._modules[name] in keep
        )


def _byte_offsets(text: str) -> list[int]:
    """offsets[i] = byte length of text[:i] under UTF-8."""
    offsets = [0] * (len(text) + 1)
    total = 0
    for i, ch in enumerate(text):
        total += len(ch.encode("utf-8"))
        offsets[i + 1] = total
    return offsets


def _strip_comment(line: str) -> str:
    cut = line.find("--")
    return line if cut < 0 else line[:cut]


def parse_theorem_file(text: str, path: str | Path) -> CorpusFile:
    """Parse one theorem file; spans are byte ranges into text."""
    path = str(path)
    module = Path(path).stem
    lines = text.split("\n")
    # char offset of the start of each line, one extra entry for EOF
    line_starts = [0]
    for line in lines:
        line_starts.append(line_starts[-1] + len(line) + 1)
    to_bytes = _byte_offsets(text)

    imports: list[str] = []
    lemmas: list[PremiseRecord] = []
    theorems: list[TheoremEntry] = []
    names: set[str] = set()
    saw_declaration = False

    def fail(lineno: int, message: str) -> ParseError:
        return ParseError(message, line=lineno, column=1)

    def claim(name: str, lineno: int) -> None:
        if name in names:
            raise DuplicateNameError(f"{path}: duplicate declaration {name!r}")
        names.add(name)

    i = 0
    n = len(lines)
    while i < n:
        raw = lines[i]
        code = _strip_comment(raw).strip()
        lineno = i + 1
        if not code:
            i += 1
            continue
        m = _IMPORT_RE.match(code)
        if m:
            if saw_declaration:
                raise fail(lineno, "imports must precede all declarations")
            imports.append(m.group(1))
            i += 1
            continue
        m = _DECL_RE.match(code)
        if not m:
            raise fail(lineno, f"expected import, lemma or theorem, got {code.split()[0]!r}")
        kind, name, formula_text = m.group(1), m.group(2), m.group(3)
        saw_declaration = True
        claim(name, lineno)
        column = 1 + _strip_comment(raw).index(formula_text) if formula_text else 1
        statement = parse_formula(formula_text, line=lineno, column=column)
        if kind == "lemma":
            docstring: str | None = None
            source_lines = [raw]
            if i + 1 < n:
                doc_match = _DOC_RE.match(_strip_comment(lines[i + 1]).strip())
                if doc_match:
                    try:
                        docstring = json.loads(doc_match.group(1))
                    except json.JSONDecodeError as e:
                        raise fail(i + 2, f"bad doc string literal: {e}") from None
                    source_lines.append(lines[i + 1])
                    i += 1
            lemmas.append(
                PremiseRecord(name, module, statement, docstring, "\n".join(source_lines))
            )
            i += 1
            continue
        # theorem: the next significant line must open the proof block
        i += 1
        while i < n and not _strip_comment(lines[i]).strip():
            i += 1
        if i >= n or _strip_comment(lines[i]).strip() != "proof":
            raise fail(min(i + 1, n), f"theorem {name!r} needs a proof block")
        proof_line = i
        i += 1
        body_start = line_starts[proof_line + 1]
        end_line = None
        while i < n:
            if _strip_comment(lines[i]).strip() == "end":
                end_line = i
                break
            i += 1
        if end_line is None:
            raise fail(n, f"proof of {name!r} is missing its end marker")
        body_end = line_starts[end_line]
        body = text[body_start:body_end]
        script, char_offsets = parse_script_offsets(body, first_line=proof_line + 2)
        step_spans = tuple(
            (to_bytes[body_start + a], to_bytes[body_start + b]) for a, b in char_offsets
        )
        theorems.append(
            TheoremEntry(
                name,
                statement,
                script,
                (to_bytes[body_start], to_bytes[body_end]),
                step_spans,
            )
        )
        i += 1

    return CorpusFile(path, module, tuple(imports), tuple(lemmas), tuple(theorems), text)


def render_corpus_file(cf: CorpusFile) -> str:
    """Canonical layout: imports, lemmas, then theorems, blank-line separated."""
    blocks: list[str] = []
    if cf.imports:
        blocks.append("\n".join(f"import {m}" for m in cf.imports))
    for rec in cf.lemmas:
        lines = [f"lemma {rec.name} : {pretty(rec.statement)}"]
        if rec.docstring is not None:
            lines.append(f"doc {json.dumps(rec.docstring, ensure_ascii=False)}")
        blocks.append("\n".join(lines))
    for thm in cf.theorems:
        lines = [f"theorem {thm.name} : {pretty(thm.statement)}", "proof"]
        lines.extend(f"  {render_tactic(step)}" for step in thm.script.steps)
        lines.append("end")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def load_library(paths: Iterable[str | Path]) -> tuple[LemmaTable, list[PremiseRecord]]:
    """Aggregate lemmas from files, enforcing globally unique names."""
    files = [parse_theorem_file(Path(p).read_text(encoding="utf-8"), p) for p in paths]
    return _aggregate_lemmas(files)


def _aggregate_lemmas(
    files: Iterable[CorpusFile],
) -> tuple[LemmaTable, list[PremiseRecord]]:
    records: list[PremiseRecord] = []
    owner: dict[str, str] = {}
    for cf in files:
        for rec in cf.lemmas:
            if rec.name in owner:
                raise DuplicateNameError(
                    f"lemma {rec.name!r} declared in both {owner[rec.name]} and {cf.path}"
                )
            owner[rec.name] = cf.path
            records.append(rec)
    table = LemmaTable((rec.name, rec.statement, rec.module) for rec in records)
    return table, records


@dataclass(frozen=True)
class Corpus:
    """All parsed files plus the merged lemma library."""

    files: tuple[CorpusFile, ...]
    library: LemmaTable
    records: tuple[PremiseRecord, ...]

    def theorems(self) -> Iterator[tuple[CorpusFile, TheoremEntry]]:
        for cf in self.files:
            for thm in cf.theorems:
                yield cf, thm

    def find_theorem(self, name: str) -> tuple[CorpusFile, TheoremEntry]:
        for cf in self.files:
            for thm in cf.theorems:
                if thm.name == name:
                    return cf, thm
        raise UnknownTheoremError(f"no theorem named {name!r}")

    def scope_for(self, cf: CorpusFile) -> LemmaTable:
        return self.library.restricted_to(cf.scope_modules())


def load_corpus(root: str | Path, validate: bool = True) -> Corpus:
    """Load every .thy file under root (path-sorted) into one corpus."""
    root = Path(root)
    paths = sorted(root.rglob("*.thy")) if root.is_dir() else [root]
    files = tuple(parse_theorem_file(p.read_text(encoding="utf-8"), p) for p in paths)
    library, records = _aggregate_lemmas(files)
    corpus = Corpus(files, library, tuple(records))
    if validate:
        for cf, thm in corpus.theorems():
            outcome = replay_script(thm, corpus.scope_for(cf))
            if outcome.status is OutcomeStatus.FAILED:
                raise InvalidPrefixError(outcome.failed_step or 0, outcome.error)
    return corpus


def replay_script(entry: TheoremEntry, lemmas: Mapping[str, Formula]) -> ProofOutcome:
    """Run the full ground-truth script from the theorem's initial goal."""
    return run_script(entry.goal(), entry.script, lemmas)


def replay_prefix(entry: TheoremEntry, i: int, lemmas: Mapping[str, Formula]) -> ProofState:
    """State after the first i ground-truth tactics.

    i = 0 is the initial goal, i = len(script) the final state. A failing
    step inside the prefix raises InvalidPrefixError carrying the step
    index and the underlying tactic error.
    """
    steps = entry.script.steps
    if not 0 <= i <= len(steps):
        raise ValueError(f"prefix length {i} outside 0..{len(steps)}")
    state = ProofState((entry.goal(),), tuple(lemmas), False)
    for j in range(i):
        try:
            state = apply_tactic(state, steps[j], lemmas)
        except (TacticError, NoGoalsError) as e:
            raise InvalidPrefixError(j, e) from e
    return state
