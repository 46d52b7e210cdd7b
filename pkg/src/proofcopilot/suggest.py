"""Checked tactic suggestions for the first goal of a proof state.

Every generated candidate is run through the kernel and lands in exactly
one of three buckets: it fails to parse or apply (dropped from checked
output), it advances the proof (a valid step, shown with the goals that
would remain), or it finishes it, meaning the successor state contains no
goals at all. Proof-closing suggestions sort ahead of valid steps so a
client can render them green-above-blue.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import CopilotError, NoGoalsError, ParseError, TacticError
from .formula import Formula
from .generation import GeneratorKind, GeneratorSpec, ScoredText, builtin_suggest, generate
from .kernel import ProofState, Sequent, apply_tactic, pretty_goal
from .tactics import Tactic, TacticKind, parse_script


class SuggestionCategory(Enum):
    PROOF_CLOSING = "ProofClosing"
    VALID_STEP = "ValidStep"


@dataclass(frozen=True, slots=True)
class Categorized:
    """Outcome of checking one candidate against a state."""

    category: SuggestionCategory | None
    error: str | None
    remaining: tuple[Sequent, ...]

    @property
    def is_error(self) -> bool:
        return self.category is None


def parse_single_tactic(text: str) -> Tactic:
    """Parse text as exactly one tactic step."""
    script = parse_script(text)
    if len(script.steps) != 1:
        raise ParseError(
            f"expected exactly one tactic, got {len(script.steps)}", 1, 1
        )
    return script.steps[0]


def categorize(
    state: ProofState, tactic_text: str, lemmas: Mapping[str, Formula]
) -> Categorized:
    """Total over arbitrary candidate text; requires a non-empty goal list.

    ProofClosing exactly when the successor state has no goals left, valid
    step otherwise; unparseable or inapplicable text reports the error.
    """
    if not state.goals:
        raise NoGoalsError("cannot categorize against an empty goal list")
    try:
        tactic = parse_single_tactic(tactic_text)
        successor = apply_tactic(state, tactic, lemmas)
    except (ParseError, TacticError) as e:
        return Categorized(None, str(e), ())
    if not successor.goals:
        return Categorized(SuggestionCategory.PROOF_CLOSING, None, ())
    return Categorized(SuggestionCategory.VALID_STEP, None, successor.goals)


@dataclass(frozen=True, slots=True)
class Suggestion:
    tactic_text: str
    category: SuggestionCategory | None
    remaining: tuple[Sequent, ...]
    score: float


@dataclass(frozen=True, slots=True)
class SuggestionSet:
    suggestions: tuple[Suggestion, ...]
    checked: bool


def _is_sorry(text: str) -> bool:
    try:
        return parse_single_tactic(text).kind is TacticKind.SORRY
    except (ParseError, CopilotError):
        return False


def _candidates(
    state: ProofState, spec: GeneratorSpec, lemmas: Mapping[str, Formula]
) -> list[ScoredText]:
    goal = state.goals[0]
    if spec.kind is GeneratorKind.BUILTIN:
        return builtin_suggest(goal, lemmas, spec.params, scope=state.scope)
    return generate(spec, pretty_goal(goal))


def suggest_tactics(
    state: ProofState,
    spec: GeneratorSpec,
    lemmas: Mapping[str, Formula],
    check: bool = True,
) -> SuggestionSet:
    """Generate candidates for the first goal and optionally kernel-check them.

    Unchecked sets carry the raw candidates (category None); checked sets
    drop failing candidates and order proof-closing suggestions before
    valid steps, then by descending score with ties on text. Candidates
    that are just sorry are never suggested.
    """
    if not state.goals:
        raise NoGoalsError("no goals to suggest for")
    candidates = [st for st in _candidates(state, spec, lemmas) if not _is_sorry(st.text)]
    if not check:
        return SuggestionSet(
            tuple(Suggestion(st.text, None, (), st.score) for st in candidates),
            checked=False,
        )
    closing: list[Suggestion] = []
    valid: list[Suggestion] = []
    for st in candidates:
        result = categorize(state, st.text, lemmas)
        if result.is_error:
            continue
        suggestion = Suggestion(st.text, result.category, result.remaining, st.score)
        if result.category is SuggestionCategory.PROOF_CLOSING:
            closing.append(suggestion)
        else:
            valid.append(suggestion)
    key = lambda s: (-s.score, s.tactic_text)
    return SuggestionSet(
        tuple(sorted(closing, key=key) + sorted(valid, key=key)), checked=True
    )
