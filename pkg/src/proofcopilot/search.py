"""Best-first proof search over an AND-OR tree.

Goal nodes are OR nodes (one applicable tactic suffices), tactic nodes are
AND nodes (every subgoal must close). The frontier is a max-priority heap
of unexpanded goal nodes where priority is the product of tactic scores
along the path from the root, ties resolved by node creation order, so
runs are fully deterministic for a deterministic generator.

Expanding a goal node instantiates the rule set against it, optionally
merges in generator candidates (score ties keep the higher of rule and
generator score), applies every candidate through the kernel, and attaches
the successes. Three prunes keep the tree finite and honest: subgoals
identical to an ancestor goal fail immediately (loop), subgoals deeper
than the depth limit fail, and subgoals whose sequent was already proved
elsewhere adopt the earlier node's proof. Proof scripts extracted from the
tree are depth-first left-to-right, which replays correctly because the
kernel puts new subgoals at the front of the goal list.
"""

from __future__ import annotations

import heapq
import time
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from .errors import (
    CopilotError,
    EmptyInputError,
    ExternalUnavailableError,
    NoGoalsError,
    ParseError,
    ProtocolError,
    TacticError,
)
from .formula import Formula
from .generation import (
    GeneratorKind,
    GeneratorSpec,
    ScoredText,
    builtin_suggest,
    generate,
)
from .kernel import ProofState, Sequent, fresh_name, pretty_goal, apply_tactic
from .tactics import (
    Tactic,
    TacticKind,
    TacticScript,
    parse_script,
    render_tactic,
    script_from_tactics,
)


@dataclass(frozen=True, slots=True)
class SearchLimits:
    max_expansions: int = 400
    max_depth: int = 20
    timeout_millis: int = 5000

    def __post_init__(self) -> None:
        if self.max_expansions < 1 or self.max_depth < 1 or self.timeout_millis < 1:
            raise ValueError("search limits must all be positive")


class SearchStatus(Enum):
    PROOF_FOUND = "ProofFound"
    EXHAUSTED = "Exhausted"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True, slots=True)
class SearchResult:
    status: SearchStatus
    script: TacticScript | None
    expansions: int
    elapsed_millis: int


class ArgStrategy(Enum):
    FIXED = "fixed"
    FRESH_NAME = "fresh-name"
    EACH_HYPOTHESIS = "each-hypothesis"
    EACH_LEMMA = "each-lemma"


@dataclass(frozen=True, slots=True)
class Rule:
    kind: TacticKind
    strategy: ArgStrategy
    priority: float

    def __post_init__(self) -> None:
        if not 0.0 < self.priority <= 1.0:
            raise ValueError("rule priority must lie in (0, 1]")


@dataclass(frozen=True, slots=True)
class RuleSet:
    rules: tuple[Rule, ...]
    use_generator: bool = False


def default_rule_set(use_generator: bool = False) -> RuleSet:
    """The shipped rule set: safe closers high, speculative moves low."""
    return RuleSet(
        (
            Rule(TacticKind.ASSUMPTION, ArgStrategy.FIXED, 0.9),
            Rule(TacticKind.TRIVIAL, ArgStrategy.FIXED, 0.9),
            Rule(TacticKind.CONTRADICTION, ArgStrategy.FIXED, 0.8),
            Rule(TacticKind.INTRO, ArgStrategy.FRESH_NAME, 0.8),
            Rule(TacticKind.SPLIT, ArgStrategy.FIXED, 0.8),
            Rule(TacticKind.CASES, ArgStrategy.EACH_HYPOTHESIS, 0.6),
            Rule(TacticKind.APPLY, ArgStrategy.EACH_HYPOTHESIS, 0.6),
            Rule(TacticKind.APPLY, ArgStrategy.EACH_LEMMA, 0.5),
            Rule(TacticKind.LEFT, ArgStrategy.FIXED, 0.4),
            Rule(TacticKind.RIGHT, ArgStrategy.FIXED, 0.4),
            Rule(TacticKind.EXFALSO, ArgStrategy.FIXED, 0.1),
        ),
        use_generator=use_generator,
    )


def instantiate_rule(
    rule: Rule,
    goal: Sequent,
    lemmas: Mapping[str, Formula],
    scope: tuple[str, ...],
) -> Iterator[Tactic]:
    """Concrete tactics a rule proposes for a goal; the kernel filters."""
    if rule.strategy is ArgStrategy.FIXED:
        yield Tactic(rule.kind)
    elif rule.strategy is ArgStrategy.FRESH_NAME:
        yield Tactic(rule.kind, fresh_name(goal))
    elif rule.strategy is ArgStrategy.EACH_HYPOTHESIS:
        for h in goal.hypotheses:
            yield Tactic(rule.kind, h.name)
    else:
        hyp_names = {h.name for h in goal.hypotheses}
        for name in scope:
            if name in lemmas and name not in hyp_names:
                yield Tactic(rule.kind, name)


class NodeStatus(Enum):
    UNEXPANDED = "unexpanded"
    EXPANDED = "expanded"
    PROVED = "proved"
    FAILED = "failed"


class GoalNode:
    __slots__ = ("sequent", "priority", "depth", "seq", "status", "parent", "tactics", "memo_ref")

    def __init__(self, sequent: Sequent, priority: float, depth: int, seq: int, parent):
        self.sequent = sequent
        self.priority = priority
        self.depth = depth
        self.seq = seq
        self.status = NodeStatus.UNEXPANDED
        self.parent: TacticNode | None = parent
        self.tactics: list[TacticNode] = []
        self.memo_ref: GoalNode | None = None


class TacticNode:
    __slots__ = ("tactic", "score", "parent", "children", "status")

    def __init__(self, tactic: Tactic, score: float, parent: GoalNode):
        self.tactic = tactic
        self.score = score
        self.parent = parent
        self.children: list[GoalNode] = []
        self.status = NodeStatus.EXPANDED


class _Search:
    def __init__(
        self,
        goal: Sequent,
        rule_set: RuleSet,
        generator: GeneratorSpec | None,
        lemmas: Mapping[str, Formula],
        limits: SearchLimits,
    ):
        self.rule_set = rule_set
        self.generator = generator
        self.lemmas = lemmas
        self.scope = tuple(lemmas.keys())
        self.limits = limits
        self.root = GoalNode(goal, 1.0, 0, 0, None)
        self.frontier: list[tuple[float, int, GoalNode]] = [(-1.0, 0, self.root)]
        self.proved: dict[Sequent, GoalNode] = {}
        self.seq = 0
        self.expansions = 0
        self.gen_cache: dict[Sequent, list[ScoredText]] = {}

    # -- status propagation ------------------------------------------------

    def _mark_goal_proved(self, gn: GoalNode) -> None:
        gn.status = NodeStatus.PROVED
        self.proved.setdefault(gn.sequent, gn)
        tn = gn.parent
        if tn is not None and tn.status is NodeStatus.EXPANDED:
            if all(c.status is NodeStatus.PROVED for c in tn.children):
                tn.status = NodeStatus.PROVED
                self._settle_goal(tn.parent)

    def _mark_goal_failed(self, gn: GoalNode) -> None:
        gn.status = NodeStatus.FAILED
        tn = gn.parent
        if tn is not None and tn.status is NodeStatus.EXPANDED:
            tn.status = NodeStatus.FAILED
            self._settle_goal(tn.parent)

    def _settle_goal(self, gn: GoalNode) -> None:
        """Re-derive a goal node's status from its tactic children."""
        if gn.status is not NodeStatus.EXPANDED:
            return
        if any(t.status is NodeStatus.PROVED for t in gn.tactics):
            self._mark_goal_proved(gn)
        elif all(t.status is NodeStatus.FAILED for t in gn.tactics):
            self._mark_goal_failed(gn)

    # -- candidate collection ----------------------------------------------

    def _generator_candidates(self, goal: Sequent) -> list[ScoredText]:
        spec = self.generator
        assert spec is not None
        cached = self.gen_cache.get(goal)
        if cached is None:
            try:
                if spec.kind is GeneratorKind.BUILTIN:
                    cached = builtin_suggest(goal, self.lemmas, spec.params, self.scope)
                else:
                    cached = generate(spec, pretty_goal(goal))
            except (ExternalUnavailableError, ProtocolError, EmptyInputError) as e:
                warnings.warn(f"generator unavailable during expansion: {e}")
                cached = []
            self.gen_cache[goal] = cached
        return cached

    def _candidates(self, goal: Sequent) -> list[tuple[Tactic, float]]:
        merged: dict[Tactic, float] = {}
        for rule in self.rule_set.rules:
            for tactic in instantiate_rule(rule, goal, self.lemmas, self.scope):
                prev = merged.get(tactic)
                if prev is None or rule.priority > prev:
                    merged[tactic] = rule.priority
        if self.rule_set.use_generator and self.generator is not None:
            for st in self._generator_candidates(goal):
                try:
                    script = _parse_candidate(st.text)
                except ParseError:
                    continue
                if script is None or script.kind is TacticKind.SORRY:
                    continue
                prev = merged.get(script)
                if prev is None or st.score > prev:
                    merged[script] = st.score
        ordered = sorted(merged.items(), key=lambda kv: (-kv[1], render_tactic(kv[0])))
        return ordered

    # -- expansion ---------------------------------------------------------

    def _ancestor_loop(self, node: GoalNode, sequent: Sequent) -> bool:
        cur: GoalNode | None = node
        while cur is not None:
            if cur.sequent == sequent:
                return True
            cur = cur.parent.parent if cur.parent is not None else None
        return False

    def expand(self, node: GoalNode) -> None:
        node.status = NodeStatus.EXPANDED
        state = ProofState((node.sequent,), self.scope, False)
        for tactic, score in self._candidates(node.sequent):
            try:
                successor = apply_tactic(state, tactic, self.lemmas)
            except (TacticError, NoGoalsError):
                continue
            tn = TacticNode(tactic, score, node)
            node.tactics.append(tn)
            for sub in successor.goals:
                self.seq += 1
                child = GoalNode(sub, node.priority * score, node.depth + 1, self.seq, tn)
                tn.children.append(child)
                donor = self.proved.get(sub)
                if donor is not None:
                    child.status = NodeStatus.PROVED
                    child.memo_ref = donor
                elif self._ancestor_loop(node, sub):
                    child.status = NodeStatus.FAILED
                elif child.depth > self.limits.max_depth:
                    child.status = NodeStatus.FAILED
                else:
                    heapq.heappush(self.frontier, (-child.priority, child.seq, child))
            if any(c.status is NodeStatus.FAILED for c in tn.children):
                tn.status = NodeStatus.FAILED
            elif all(c.status is NodeStatus.PROVED for c in tn.children):
                tn.status = NodeStatus.PROVED
        self._settle_goal(node)

    # -- driver ------------------------------------------------------------

    def run(self) -> SearchResult:
        start = time.perf_counter()
        deadline = start + self.limits.timeout_millis / 1000.0
        while True:
            if self.root.status is NodeStatus.PROVED:
                tactics = extract_tactics(self.root)
                return self._result(SearchStatus.PROOF_FOUND, script_from_tactics(tactics), start)
            if self.root.status is NodeStatus.FAILED or not self.frontier:
                return self._result(SearchStatus.EXHAUSTED, None, start)
            if self.expansions >= self.limits.max_expansions:
                return self._result(SearchStatus.TIMED_OUT, None, start)
            if time.perf_counter() > deadline:
                return self._result(SearchStatus.TIMED_OUT, None, start)
            _, _, node = heapq.heappop(self.frontier)
            if node.status is not NodeStatus.UNEXPANDED:
                continue
            donor = self.proved.get(node.sequent)
            if donor is not None and donor is not node:
                node.memo_ref = donor
                self._mark_goal_proved(node)
                continue
            self.expansions += 1
            self.expand(node)

    def _result(self, status: SearchStatus, script: TacticScript | None, start: float) -> SearchResult:
        elapsed = int((time.perf_counter() - start) * 1000)
        return SearchResult(status, script, self.expansions, elapsed)


def _parse_candidate(text: str) -> Tactic | None:
    script = parse_script(text)
    if len(script.steps) != 1:
        return None
    return script.steps[0]


def extract_tactics(root: GoalNode) -> list[Tactic]:
    """Depth-first left-to-right script of a proved tree, memo hops followed."""
    if root.status is not NodeStatus.PROVED:
        raise CopilotError("cannot extract a script from an unproved tree")
    out: list[Tactic] = []

    def emit(gn: GoalNode) -> None:
        if gn.memo_ref is not None:
            emit(gn.memo_ref)
            return
        for tn in gn.tactics:
            if tn.status is NodeStatus.PROVED:
                out.append(tn.tactic)
                for child in tn.children:
                    emit(child)
                return
        raise CopilotError("proved goal node has no proved tactic")  # pragma: no cover

    emit(root)
    return out


def best_first_search(
    goal: Sequent,
    rule_set: RuleSet,
    generator: GeneratorSpec | None,
    lemmas: Mapping[str, Formula],
    limits: SearchLimits = SearchLimits(),
) -> SearchResult:
    """Search for a script proving goal under the given lemma table.

    ProofFound results carry a sorry-free script that run_script accepts;
    Exhausted means the finite tree was fully refuted under the depth
    limit, TimedOut that the expansion budget or wall clock ran out first.
    Deterministic apart from elapsed_millis whenever the generator is.
    """
    return _Search(goal, rule_set, generator, lemmas, limits).run()
