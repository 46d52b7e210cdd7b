"""Tactic kernel: sequents, proof states, and tactic application.

A proof state is an ordered list of open goals plus the set of lemma names
the proof may reference. Tactics always address the first goal; subgoals a
tactic creates replace it at the front of the list, so scripts read
depth-first, left to right. States are immutable: applying a tactic either
returns a new state or raises TacticError leaving the old one untouched.

References resolve hypothesis-first, then to an in-scope lemma. The sorry
tactic closes the first goal unconditionally and taints the state's
used_sorry flag, which no later step can clear.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    CopilotError,
    NoGoalsError,
    ParseError,
    TacticError,
    TacticErrorKind,
)
from .formula import (
    FALSITY,
    TRUTH,
    And,
    Falsity,
    Formula,
    Imp,
    Or,
    parse_formula,
    pretty,
)
from .tactics import Tactic, TacticKind, TacticScript

TURNSTILE = "⊢"


@dataclass(frozen=True, slots=True)
class Hypothesis:
    name: str
    formula: Formula


@dataclass(frozen=True, slots=True)
class Sequent:
    hypotheses: tuple[Hypothesis, ...]
    target: Formula


@dataclass(frozen=True, slots=True)
class ProofState:
    goals: tuple[Sequent, ...]
    scope: tuple[str, ...] = ()
    used_sorry: bool = False


def sequent(target: Formula, hypotheses: Iterable[Hypothesis] = ()) -> Sequent:
    return Sequent(tuple(hypotheses), target)


def initial_state(goal: Sequent, lemmas: Mapping[str, Formula]) -> ProofState:
    return ProofState((goal,), tuple(lemmas.keys()), False)


def fresh_name(goal: Sequent, base: str = "h") -> str:
    """First unused of base, base1, base2, ... among the goal's hypotheses."""
    taken = {h.name for h in goal.hypotheses}
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _resolve(goal: Sequent, state: ProofState, lemmas: Mapping[str, Formula], ref: str) -> Formula:
    for h in goal.hypotheses:
        if h.name == ref:
            return h.formula
    if ref in lemmas and ref in state.scope:
        return lemmas[ref]
    raise TacticError(TacticErrorKind.UNKNOWN_REF, f"unknown reference {ref!r}")


def _find_hypothesis(goal: Sequent, ref: str) -> int:
    for i, h in enumerate(goal.hypotheses):
        if h.name == ref:
            return i
    raise TacticError(TacticErrorKind.UNKNOWN_REF, f"no hypothesis named {ref!r}")


def apply_tactic(
    state: ProofState, tactic: Tactic, lemmas: Mapping[str, Formula]
) -> ProofState:
    """Apply one tactic to the first goal of state.

    Raises NoGoalsError when the state has no goals and TacticError (with a
    stable kind) when the tactic does not apply; in both cases state is
    unchanged. Sorry is the only tactic that sets used_sorry.
    """
    if not state.goals:
        raise NoGoalsError("no goals to act on")
    goal = state.goals[0]
    rest = state.goals[1:]
    kind = tactic.kind
    used_sorry = state.used_sorry

    if kind is TacticKind.INTRO:
        if not isinstance(goal.target, Imp):
            raise TacticError(
                TacticErrorKind.TARGET_SHAPE, "intro needs an implication target"
            )
        assert tactic.arg is not None
        if any(h.name == tactic.arg for h in goal.hypotheses):
            raise TacticError(
                TacticErrorKind.DUPLICATE_NAME, f"{tactic.arg!r} is already bound"
            )
        new_hyp = Hypothesis(tactic.arg, goal.target.lhs)
        subgoals: tuple[Sequent, ...] = (
            Sequent(goal.hypotheses + (new_hyp,), goal.target.rhs),
        )
    elif kind is TacticKind.EXACT:
        assert tactic.arg is not None
        f = _resolve(goal, state, lemmas, tactic.arg)
        if f != goal.target:
            raise TacticError(
                TacticErrorKind.NO_MATCH,
                f"{tactic.arg} : {pretty(f)} does not match the target",
            )
        subgoals = ()
    elif kind is TacticKind.ASSUMPTION:
        if not any(h.formula == goal.target for h in goal.hypotheses):
            raise TacticError(TacticErrorKind.NO_MATCH, "no hypothesis matches the target")
        subgoals = ()
    elif kind is TacticKind.APPLY:
        assert tactic.arg is not None
        f = _resolve(goal, state, lemmas, tactic.arg)
        antecedents: list[Formula] = []
        cur = f
        while True:
            if cur == goal.target:
                break
            if isinstance(cur, Imp):
                antecedents.append(cur.lhs)
                cur = cur.rhs
            else:
                raise TacticError(
                    TacticErrorKind.NO_MATCH,
                    f"{tactic.arg} : {pretty(f)} does not conclude the target",
                )
        subgoals = tuple(Sequent(goal.hypotheses, a) for a in antecedents)
    elif kind is TacticKind.SPLIT:
        if not isinstance(goal.target, And):
            raise TacticError(
                TacticErrorKind.TARGET_SHAPE, "split needs a conjunction target"
            )
        subgoals = (
            Sequent(goal.hypotheses, goal.target.lhs),
            Sequent(goal.hypotheses, goal.target.rhs),
        )
    elif kind is TacticKind.LEFT:
        if not isinstance(goal.target, Or):
            raise TacticError(
                TacticErrorKind.TARGET_SHAPE, "left needs a disjunction target"
            )
        subgoals = (Sequent(goal.hypotheses, goal.target.lhs),)
    elif kind is TacticKind.RIGHT:
        if not isinstance(goal.target, Or):
            raise TacticError(
                TacticErrorKind.TARGET_SHAPE, "right needs a disjunction target"
            )
        subgoals = (Sequent(goal.hypotheses, goal.target.rhs),)
    elif kind is TacticKind.CASES:
        assert tactic.arg is not None
        idx = _find_hypothesis(goal, tactic.arg)
        h = goal.hypotheses[idx]
        others = goal.hypotheses[:idx] + goal.hypotheses[idx + 1 :]
        taken = {o.name for o in others}
        if isinstance(h.formula, And):
            names = (f"{h.name}.1", f"{h.name}.2")
            if taken & set(names):
                raise TacticError(
                    TacticErrorKind.DUPLICATE_NAME,
                    f"{names[0]} or {names[1]} is already bound",
                )
            subgoals = (
                Sequent(
                    others
                    + (
                        Hypothesis(names[0], h.formula.lhs),
                        Hypothesis(names[1], h.formula.rhs),
                    ),
                    goal.target,
                ),
            )
        elif isinstance(h.formula, Or):
            names = (f"{h.name}.1", f"{h.name}.2")
            if taken & set(names):
                raise TacticError(
                    TacticErrorKind.DUPLICATE_NAME,
                    f"{names[0]} or {names[1]} is already bound",
                )
            subgoals = (
                Sequent(others + (Hypothesis(names[0], h.formula.lhs),), goal.target),
                Sequent(others + (Hypothesis(names[1], h.formula.rhs),), goal.target),
            )
        elif isinstance(h.formula, Falsity):
            subgoals = ()
        else:
            raise TacticError(
                TacticErrorKind.HYP_SHAPE,
                f"cases needs a conjunction, disjunction or False hypothesis, got {pretty(h.formula)}",
            )
    elif kind is TacticKind.TRIVIAL:
        if goal.target != TRUTH:
            raise TacticError(TacticErrorKind.TARGET_SHAPE, "trivial needs target True")
        subgoals = ()
    elif kind is TacticKind.EXFALSO:
        subgoals = (Sequent(goal.hypotheses, FALSITY),)
    elif kind is TacticKind.CONTRADICTION:
        if not _has_contradiction(goal):
            raise TacticError(
                TacticErrorKind.NO_CONTRADICTION,
                "no False hypothesis and no refuted hypothesis",
            )
        subgoals = ()
    elif kind is TacticKind.SORRY:
        subgoals = ()
        used_sorry = True
    else:  # pragma: no cover - TacticKind is closed
        raise TypeError(f"unhandled tactic kind {kind!r}")

    return ProofState(subgoals + rest, state.scope, used_sorry)


def _has_contradiction(goal: Sequent) -> bool:
    formulas = [h.formula for h in goal.hypotheses]
    if any(isinstance(f, Falsity) for f in formulas):
        return True
    present = set(formulas)
    for f in formulas:
        if isinstance(f, Imp) and f.rhs == FALSITY and f.lhs in present:
            return True
    return False


# ---------------------------------------------------------------------------
# Script replay


class OutcomeStatus(Enum):
    PROVED = "Proved"
    OPEN = "Open"
    FAILED = "Failed"


@dataclass(frozen=True, slots=True)
class ProofOutcome:
    status: OutcomeStatus
    remaining: tuple[Sequent, ...]
    failed_step: int | None
    error: CopilotError | None
    used_sorry: bool


def run_script(
    goal: Sequent,
    script: TacticScript,
    lemmas: Mapping[str, Formula],
    scope: Iterable[str] | None = None,
) -> ProofOutcome:
    """Replay script against goal from a fresh state.

    Proved means every goal closed, Open means steps ran out with goals
    left, Failed reports the first failing step (state as of that step) and
    its error. used_sorry is reported for all three.
    """
    state = ProofState(
        (goal,),
        tuple(scope) if scope is not None else tuple(lemmas.keys()),
        False,
    )
    for i, step in enumerate(script.steps):
        try:
            state = apply_tactic(state, step, lemmas)
        except (TacticError, NoGoalsError) as e:
            return ProofOutcome(OutcomeStatus.FAILED, state.goals, i, e, state.used_sorry)
    if state.goals:
        return ProofOutcome(OutcomeStatus.OPEN, state.goals, None, None, state.used_sorry)
    return ProofOutcome(OutcomeStatus.PROVED, (), None, None, state.used_sorry)


# ---------------------------------------------------------------------------
# Goal text


def pretty_goal(goal: Sequent) -> str:
    """`h1 : F1, h2 : F2 ⊢ T`; just `⊢ T` when there are no hypotheses."""
    target = f"{TURNSTILE} {pretty(goal.target)}"
    if not goal.hypotheses:
        return target
    hyps = ", ".join(f"{h.name} : {pretty(h.formula)}" for h in goal.hypotheses)
    return f"{hyps} {target}"


_GOAL_NAME_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z0-9_]+)*)\s*:")


def parse_goal(text: str) -> Sequent:
    """Inverse of pretty_goal. Accepts `|-` as an ASCII turnstile."""
    for sep in (TURNSTILE, "|-"):
        split = text.find(sep)
        if split >= 0:
            break
    else:
        raise ParseError("missing turnstile", 1, max(1, len(text)), (f"'{TURNSTILE}'", "'|-'"))
    left = text[:split]
    right = text[split + len(sep) :]
    hyps: list[Hypothesis] = []
    if left.strip():
        cursor = 0
        for part in left.split(","):
            m = _GOAL_NAME_RE.match(part)
            if m is None:
                bad = cursor + (len(part) - len(part.lstrip()))
                raise ParseError("expected `name : formula`", 1, bad + 1, ("a hypothesis",))
            body = part[m.end() :]
            col = cursor + m.end() + 1
            hyps.append(Hypothesis(m.group(1), parse_formula(body, column=col)))
            cursor += len(part) + 1
    target = parse_formula(right, column=split + len(sep) + 1)
    return Sequent(tuple(hyps), target)
