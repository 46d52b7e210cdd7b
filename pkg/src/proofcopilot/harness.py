"""Benchmark harness: simulated human/tool collaboration and its metrics.

The protocol replays a theorem's ground-truth script one tactic at a
time. After each human step (including step zero, before any), the tool
under test gets one shot at the remaining goals. The first step index at
which it closes everything is the number of manually entered tactics;
a tool that never succeeds is charged the full script length.

Three tools are measured. RulesOnly searches with the built-in rule set
alone and deliberately small limits, the out-of-the-box automation
baseline. SuggestOnly asks the generator for single tactics and succeeds
only when every remaining goal has a proof-closing suggestion. And
SearchWithGenerator runs best-first search with generator candidates
merged in under the full default limits.

Reports are deterministic: records are assembled per tool in theorem
name order and the JSON encoding carries no timing data, so reruns over
the same corpus produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, TheoremEntry, replay_prefix
from .errors import EmptyInputError, InvalidPrefixError
from .formula import Formula
from .generation import GeneratorSpec
from .kernel import ProofState, Sequent
from .search import (
    RuleSet,
    SearchLimits,
    SearchStatus,
    best_first_search,
    default_rule_set,
)
from .suggest import SuggestionCategory, suggest_tactics
from .tactics import TacticKind


class ToolKind(Enum):
    RULES_ONLY = "RulesOnly"
    SUGGEST_ONLY = "SuggestOnly"
    SEARCH_WITH_GENERATOR = "SearchWithGenerator"


# Out-of-the-box limits per tool. The rules baseline ships with a small
# budget in the spirit of a default automation call; generator-backed
# search gets the full default search budget.
RULES_ONLY_LIMITS = SearchLimits(max_expansions=16, max_depth=8, timeout_millis=2000)
SEARCH_LIMITS = SearchLimits()


@dataclass(frozen=True, slots=True)
class ToolSpec:
    kind: ToolKind
    limits: SearchLimits
    generator: GeneratorSpec | None = None
    rule_set: RuleSet | None = None

    def __post_init__(self) -> None:
        if self.kind is not ToolKind.RULES_ONLY and self.generator is None:
            raise ValueError(f"{self.kind.value} needs a generator")

    def effective_rules(self) -> RuleSet:
        if self.rule_set is not None:
            return self.rule_set
        return default_rule_set(use_generator=self.kind is ToolKind.SEARCH_WITH_GENERATOR)


def default_tool_specs(generator: GeneratorSpec) -> tuple[ToolSpec, ToolSpec, ToolSpec]:
    """The three benchmark tools in report row order."""
    return (
        ToolSpec(ToolKind.RULES_ONLY, RULES_ONLY_LIMITS),
        ToolSpec(ToolKind.SUGGEST_ONLY, SEARCH_LIMITS, generator),
        ToolSpec(ToolKind.SEARCH_WITH_GENERATOR, SEARCH_LIMITS, generator),
    )


@dataclass(frozen=True, slots=True)
class CollabRecord:
    """One theorem/tool interaction under the collaboration protocol."""

    theorem_name: str
    ground_truth_len: int
    manual_tactics: int
    solved_at_step: int | None
    tool_succeeded: bool

    def __post_init__(self) -> None:
        if not 0 <= self.manual_tactics <= self.ground_truth_len:
            raise ValueError("manual tactic count outside the script length")
        if self.tool_succeeded != (self.solved_at_step is not None):
            raise ValueError("success flag disagrees with solved step")
        if self.tool_succeeded and self.solved_at_step != self.manual_tactics:
            raise ValueError("solved step must equal the manual tactic count")
        if not self.tool_succeeded and self.manual_tactics != self.ground_truth_len:
            raise ValueError("failures are charged the full script")


@dataclass(frozen=True, slots=True)
class ToolMetrics:
    avg_manual_tactics: float
    pct_autonomous: float
    avg_pct_automated: float


def _goal_closed_by_suggestion(
    goal: Sequent, spec: GeneratorSpec, lemmas: Mapping[str, Formula]
) -> bool:
    state = ProofState((goal,), tuple(lemmas), False)
    suggestions = suggest_tactics(state, spec, lemmas, check=True)
    return any(
        s.category is SuggestionCategory.PROOF_CLOSING for s in suggestions.suggestions
    )


def tool_proves(state: ProofState, tool: ToolSpec, lemmas: Mapping[str, Formula]) -> bool:
    """One tool invocation: must close every remaining goal.

    Goals are attempted independently and sequentially, each under the
    tool's full limits.
    """
    if tool.kind is ToolKind.SUGGEST_ONLY:
        assert tool.generator is not None
        return all(
            _goal_closed_by_suggestion(goal, tool.generator, lemmas)
            for goal in state.goals
        )
    rules = tool.effective_rules()
    generator = tool.generator if tool.kind is ToolKind.SEARCH_WITH_GENERATOR else None
    for goal in state.goals:
        result = best_first_search(goal, rules, generator, lemmas, tool.limits)
        if result.status is not SearchStatus.PROOF_FOUND:
            return False
    return True


def simulate_collaboration(
    entry: TheoremEntry, tool: ToolSpec, lemmas: Mapping[str, Formula]
) -> CollabRecord:
    """Replay ground truth step by step, invoking the tool after each."""
    if any(step.kind is TacticKind.SORRY for step in entry.script.steps):
        raise ValueError(f"{entry.name}: benchmark scripts must be sorry-free")
    n = len(entry.script.steps)
    for i in range(n):
        state = replay_prefix(entry, i, lemmas)
        if tool_proves(state, tool, lemmas):
            return CollabRecord(entry.name, n, i, i, True)
    return CollabRecord(entry.name, n, n, None, False)


def compute_metrics(records: Sequence[CollabRecord]) -> ToolMetrics:
    if not records:
        raise EmptyInputError("no collaboration records to aggregate")
    for rec in records:
        if rec.ground_truth_len < 1:
            raise ValueError(f"{rec.theorem_name}: ground truth script is empty")
    count = len(records)
    avg_manual = sum(r.manual_tactics for r in records) / count
    autonomous = sum(1 for r in records if r.manual_tactics == 0)
    automated = sum(1.0 - r.manual_tactics / r.ground_truth_len for r in records)
    return ToolMetrics(avg_manual, 100.0 * autonomous / count, 100.0 * automated / count)


@dataclass(frozen=True, slots=True)
class ToolReport:
    name: str
    metrics: ToolMetrics
    records: tuple[CollabRecord, ...]


@dataclass(frozen=True, slots=True)
class BenchReport:
    tools: tuple[ToolReport, ...]

    def to_json(self) -> str:
        payload = {
            "tools": [
                {
                    "name": tool.name,
                    "avgManualTactics": tool.metrics.avg_manual_tactics,
                    "pctAutonomous": tool.metrics.pct_autonomous,
                    "avgPctAutomated": tool.metrics.avg_pct_automated,
                    "records": [
                        {
                            "theoremName": rec.theorem_name,
                            "groundTruthLen": rec.ground_truth_len,
                            "manualTactics": rec.manual_tactics,
                            "solvedAtStep": rec.solved_at_step,
                            "toolSucceeded": rec.tool_succeeded,
                        }
                        for rec in tool.records
                    ],
                }
                for tool in self.tools
            ]
        }
        return json.dumps(payload, indent=2) + "\n"


def _run_pairs(
    pairs: Sequence[tuple[TheoremEntry, Mapping[str, Formula]]],
    tools: Sequence[ToolSpec],
) -> BenchReport:
    ordered = sorted(pairs, key=lambda pair: pair[0].name)
    reports: list[ToolReport] = []
    for tool in tools:
        records: list[CollabRecord] = []
        for entry, lemmas in ordered:
            n = len(entry.script.steps)
            try:
                records.append(simulate_collaboration(entry, tool, lemmas))
            except InvalidPrefixError:
                # a corrupted entry counts as a failure, not an abort
                records.append(CollabRecord(entry.name, n, n, None, False))
        reports.append(ToolReport(tool.kind.value, compute_metrics(records), tuple(records)))
    return BenchReport(tuple(reports))


def run_benchmark(
    entries: Iterable[TheoremEntry],
    tools: Sequence[ToolSpec],
    lemmas: Mapping[str, Formula],
) -> BenchReport:
    """Benchmark entries against each tool over one shared lemma table."""
    return _run_pairs([(entry, lemmas) for entry in entries], tools)


def benchmark_corpus(corpus: Corpus, tools: Sequence[ToolSpec]) -> BenchReport:
    """Benchmark a whole corpus, scoping lemmas per file (module + imports)."""
    scopes = {cf.path: corpus.scope_for(cf) for cf in corpus.files}
    pairs = [(thm, scopes[cf.path]) for cf, thm in corpus.theorems()]
    return _run_pairs(pairs, tools)


def render_table(report: BenchReport) -> str:
    """Aligned three-metric table, one row per tool."""
    headers = ("tool", "avg manual tactics", "% autonomous", "avg % automated")
    rows = [
        (
            tool.name,
            f"{tool.metrics.avg_manual_tactics:.2f}",
            f"{tool.metrics.pct_autonomous:.1f}",
            f"{tool.metrics.avg_pct_automated:.1f}",
        )
        for tool in report.tools
    ]
    widths = [
        max(len(headers[c]), *(len(row[c]) for row in rows)) if rows else len(headers[c])
        for c in range(4)
    ]
    lines = [
        "  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[c] for c in range(4)),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
