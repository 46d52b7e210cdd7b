"""Decision procedure for intuitionistic propositional validity.

Implements Dyckhoff's contraction-free sequent calculus (the usual
terminating reformulation of LJ): invertible left and right rules are
applied eagerly, and only the nested-implication left rule and right
disjunction introduce branching. Contexts are kept as frozensets, which is
sound because weakening and contraction are admissible, and every rule
strictly decreases a multiset ordering on formula weight, so the recursion
terminates without an occurs-check.

decide_sequent answers provability for a kernel Sequent; decide answers
validity of a closed formula. Results are memoized per process.
"""

from __future__ import annotations

from .formula import FALSITY, TRUTH, And, Atom, Falsity, Formula, Imp, Or, Truth
from .kernel import Sequent

_memo: dict[tuple[frozenset[Formula], Formula], bool] = {}


def decide(goal: Formula) -> bool:
    """True iff goal is intuitionistically valid (no hypotheses)."""
    return _prove(frozenset(), goal)


def decide_sequent(s: Sequent) -> bool:
    """True iff the sequent's hypotheses intuitionistically entail its target."""
    return _prove(frozenset(h.formula for h in s.hypotheses), s.target)


def clear_memo() -> None:
    _memo.clear()


def _prove(ctx: frozenset[Formula], goal: Formula) -> bool:
    key = (ctx, goal)
    hit = _memo.get(key)
    if hit is not None:
        return hit
    result = _prove_uncached(ctx, goal)
    _memo[key] = result
    return result


def _prove_uncached(ctx: frozenset[Formula], goal: Formula) -> bool:
    if isinstance(goal, Truth):
        return True
    if FALSITY in ctx or goal in ctx:
        return True

    # Invertible left rules: reduce the first reducible context formula.
    # Which one is picked does not affect the answer, only the route.
    for f in ctx:
        if isinstance(f, Truth):
            return _prove(ctx - {f}, goal)
        if isinstance(f, And):
            return _prove(ctx - {f} | {f.lhs, f.rhs}, goal)
        if isinstance(f, Or):
            rest = ctx - {f}
            return _prove(rest | {f.lhs}, goal) and _prove(rest | {f.rhs}, goal)
        if isinstance(f, Imp):
            a = f.lhs
            if isinstance(a, Truth):
                return _prove(ctx - {f} | {f.rhs}, goal)
            if isinstance(a, Falsity):
                return _prove(ctx - {f}, goal)
            if isinstance(a, And):
                replacement = Imp(a.lhs, Imp(a.rhs, f.rhs))
                return _prove(ctx - {f} | {replacement}, goal)
            if isinstance(a, Or):
                replacement = {Imp(a.lhs, f.rhs), Imp(a.rhs, f.rhs)}
                return _prove(ctx - {f} | replacement, goal)
            if isinstance(a, Atom) and a in ctx:
                return _prove(ctx - {f} | {f.rhs}, goal)

    # Invertible right rules.
    if isinstance(goal, And):
        return _prove(ctx, goal.lhs) and _prove(ctx, goal.rhs)
    if isinstance(goal, Imp):
        return _prove(ctx | {goal.lhs}, goal.rhs)

    # Branching rules: right disjunction, then the left rule for nested
    # implications (A -> B) -> C, whose first premise re-proves A -> B with
    # B -> C available.
    if isinstance(goal, Or):
        if _prove(ctx, goal.lhs) or _prove(ctx, goal.rhs):
            return True
    for f in ctx:
        if isinstance(f, Imp) and isinstance(f.lhs, Imp):
            a, b, c = f.lhs.lhs, f.lhs.rhs, f.rhs
            rest = ctx - {f}
            if _prove(rest | {Imp(b, c)}, Imp(a, b)) and _prove(rest | {c}, goal):
                return True
    return False
