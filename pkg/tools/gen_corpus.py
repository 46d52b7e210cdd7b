"""Generate and validate the shipped benchmark corpus.

Writes the .thy files under src/proofcopilot/data/corpus and then checks,
theorem by theorem and prefix by prefix, that each tool behaves the way
the benchmark story needs:

O quick theorems (one-tactic proofs): every tool closes the initial goal.
O chain theorems: the small-budget rules tool and the suggestion tool
  both first succeed exactly at the last step, while generator-backed
  search proves the initial goal within its default budget.

The chain files carry a wall of decoy lemmas per chain level whose
conclusions match the level's proposition. Rule candidates are ordered
alphabetically within a priority class, and the decoys sort before the
real step lemmas, so a 16-expansion search drowns before reaching the
step. The validation below is what makes that arrangement trustworthy;
rerun this script after any change to search ordering or the rule set.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from proofcopilot.corpus import load_corpus, parse_theorem_file, render_corpus_file
from proofcopilot.formula import parse_formula, pretty
from proofcopilot.generation import GeneratorSpec
from proofcopilot.harness import (
    ToolKind,
    benchmark_corpus,
    default_tool_specs,
    render_table,
    tool_proves,
)
from proofcopilot.kernel import OutcomeStatus, Hypothesis, Sequent
from proofcopilot.oracle import decide_sequent
from proofcopilot.corpus import replay_prefix, replay_script
from proofcopilot.search import SearchStatus, best_first_search, default_rule_set

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "proofcopilot" / "data" / "corpus"

AUX_PER_LEVEL = 16


def fmt(text: str) -> str:
    return pretty(parse_formula(text))


def lemma_line(name: str, statement: str, doc: str | None = None) -> str:
    block = f"lemma {name} : {fmt(statement)}"
    if doc is not None:
        block += f"\ndoc {json.dumps(doc)}"
    return block


def theorem_block(name: str, statement: str, steps: list[str]) -> str:
    body = "\n".join(f"  {s}" for s in steps)
    return f"theorem {name} : {fmt(statement)}\nproof\n{body}\nend"


def facts_file(facts: list[tuple[str, str, str | None]], truths: list[str],
               imports: tuple[str, ...] = (), extra_theorems: tuple[str, ...] = ()) -> str:
    blocks = []
    if imports:
        blocks.append("\n".join(f"import {m}" for m in imports))
    for name, statement, doc in facts:
        blocks.append(lemma_line(name, statement, doc))
    for name in truths:
        blocks.append(theorem_block(name, "True", ["trivial"]))
    for name, statement, _ in facts:
        blocks.append(theorem_block(f"use_{name}", statement, [f"exact {name}"]))
    blocks.extend(extra_theorems)
    return "\n\n".join(blocks) + "\n"


def chains_file(tag: str, decoys: tuple[str, str],
                imports: tuple[str, ...] = ()) -> str:
    """Seven chain propositions, six steps, a decoy wall per level."""
    c = lambda i: f"C{tag}{i}"
    blocks = []
    if imports:
        blocks.append("\n".join(f"import {m}" for m in imports))
    step_docs = {
        1: "First link of the chain.",
        6: "Last link of the chain.",
    }
    for k in range(1, 7):
        for j in range(1, AUX_PER_LEVEL + 1):
            blocks.append(lemma_line(f"aux_{tag}{k}_{j:02d}", f"Q{tag}{k}V{j:02d} -> {c(k)}"))
    for k in range(6):
        blocks.append(lemma_line(f"step_{tag}{k}_{tag}{k + 1}", f"{c(k)} -> {c(k + 1)}",
                                 step_docs.get(k + 1)))
    dl, dr = decoys
    spans = [(s, s + c_len) for c_len in range(2, 5) for s in range(0, 7 - c_len)]
    for s, t in spans:
        steps = ["intro d", "intro h"]
        steps += [f"apply step_{tag}{k - 1}_{tag}{k}" for k in range(t, s, -1)]
        steps.append("exact h")
        blocks.append(
            theorem_block(f"chain_{tag}_{s}_{t}", f"({dl} /\\ {dr}) -> {c(s)} -> {c(t)}", steps)
        )
    return "\n\n".join(blocks) + "\n"


def build_files() -> dict[str, str]:
    facts01 = facts_file(
        facts=[
            ("fact_pair", "FA1 /\\ FA2", "Both components hold."),
            ("fact_either", "FB1 \\/ FB2", None),
            ("fact_self_imp", "FC1 -> FC1", None),
            ("fact_swap_pair", "FD1 /\\ FD2 -> FD2 /\\ FD1", "Conjunction commutes."),
            ("fact_equiv", "FE1 <-> FE2", None),
            ("fact_no_fe3", "~FE3", "FE3 is ruled out."),
            ("fact_const", "FG1 -> FG2 -> FG1", None),
            ("fact_triple", "FH1 /\\ (FH2 /\\ FH3)", None),
            ("fact_mixed", "(FI1 /\\ FI2) \\/ FI3", None),
            ("fact_project", "FJ1 /\\ FJ2 -> FJ1", None),
            ("fact_excluded", "~FK1 \\/ FK1", "Decidability of FK1, assumed outright."),
        ],
        truths=["truth_smoke", "truth_reprise"],
    )
    facts02 = facts_file(
        facts=[
            ("note_pair", "GA1 /\\ GA2", None),
            ("note_split", "GB1 \\/ GB2", "At least one branch is live."),
            ("note_chain2", "GC1 -> GC2 -> GC3", None),
            ("note_equiv", "GD1 <-> GD2", None),
            ("note_no_ge", "~GE1", None),
            ("note_nested", "(GF1 -> GF2) -> GF1 -> GF2", "Application in lemma form."),
            ("note_left", "GG1 -> GG1 \\/ GG2", None),
            ("note_wide", "GH1 \\/ (GH2 /\\ GH3)", None),
            ("note_assoc", "GI1 /\\ (GI2 /\\ GI3)", None),
            ("note_rotate", "GJ1 -> GJ2 -> GJ3 -> GJ1", None),
        ],
        truths=["truth_extra", "truth_final"],
        imports=("facts01",),
        extra_theorems=(
            theorem_block("reuse_pair", "FA1 /\\ FA2", ["exact fact_pair"]),
        ),
    )
    chains01 = chains_file("A", ("DJ1", "DJ2"))
    chains02 = chains_file("B", ("DK1", "DK2"), imports=("chains01",))
    return {
        "facts01.thy": facts01,
        "facts02.thy": facts02,
        "chains01.thy": chains01,
        "chains02.thy": chains02,
    }


def validate(root: Path) -> None:
    corpus = load_corpus(root)
    gen = GeneratorSpec.builtin()
    rules_tool, suggest_tool, search_tool = default_tool_specs(gen)
    names = set()
    total_steps = 0
    theorem_count = 0
    problems: list[str] = []

    for cf in corpus.files:
        # canonical round-trip
        rendered = render_corpus_file(cf)
        if rendered != cf.text:
            problems.append(f"{cf.path}: not in canonical form")
        for thm in cf.theorems:
            theorem_count += 1
            n = len(thm.script.steps)
            total_steps += n
            if thm.name in names:
                problems.append(f"duplicate theorem name {thm.name}")
            names.add(thm.name)
            lemmas = corpus.scope_for(cf)
            out = replay_script(thm, lemmas)
            if out.status is not OutcomeStatus.PROVED or out.used_sorry:
                problems.append(f"{thm.name}: ground truth does not replay")
                continue
            hyps = tuple(Hypothesis(n2, f) for n2, f in lemmas.items())
            if not decide_sequent(Sequent(hyps, thm.statement)):
                problems.append(f"{thm.name}: oracle rejects statement under lemmas")
            is_chain = thm.name.startswith("chain_")
            for i in range(n):
                state = replay_prefix(thm, i, lemmas)
                r = tool_proves(state, rules_tool, lemmas)
                s = tool_proves(state, suggest_tool, lemmas)
                expect = (i == n - 1) if is_chain else (i >= 0)
                if r != expect:
                    problems.append(f"{thm.name}@{i}: rules={'win' if r else 'fail'}, wanted {'win' if expect else 'fail'}")
                if s != expect:
                    problems.append(f"{thm.name}@{i}: suggest={'win' if s else 'fail'}, wanted {'win' if expect else 'fail'}")
                if not is_chain:
                    break  # quick theorems: only the initial state matters
            # search tool must be fully autonomous
            g0 = replay_prefix(thm, 0, lemmas).goals[0]
            res = best_first_search(g0, default_rule_set(use_generator=True), gen,
                                    lemmas, search_tool.limits)
            if res.status is not SearchStatus.PROOF_FOUND:
                problems.append(f"{thm.name}: search tool fails at step 0 ({res.status.value} after {res.expansions})")
            elif res.expansions > 380:
                problems.append(f"{thm.name}: search cuts it too close ({res.expansions} expansions)")

    if theorem_count < 50:
        problems.append(f"only {theorem_count} theorems, need >= 50")
    avg_len = total_steps / theorem_count
    if avg_len < 3.0:
        problems.append(f"average script length {avg_len:.2f} < 3")

    print(f"{theorem_count} theorems, avg script length {avg_len:.2f}")
    if problems:
        print(f"\n{len(problems)} problem(s):")
        for p in problems:
            print("  -", p)
        sys.exit(1)

    report = benchmark_corpus(corpus, (rules_tool, suggest_tool, search_tool))
    print()
    print(render_table(report))
    rules_m, suggest_m, search_m = (t.metrics for t in report.tools)
    assert search_m.avg_manual_tactics <= suggest_m.avg_manual_tactics <= rules_m.avg_manual_tactics
    assert search_m.pct_autonomous >= rules_m.pct_autonomous + 10.0
    report2 = benchmark_corpus(corpus, (rules_tool, suggest_tool, search_tool))
    assert report.to_json() == report2.to_json(), "report not deterministic"
    print("directional metrics + determinism hold")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    files = build_files()
    for name, text in files.items():
        # round-trip sanity before writing anything
        cf = parse_theorem_file(text, OUT_DIR / name)
        assert render_corpus_file(cf) == text, f"{name} is not canonical"
        (OUT_DIR / name).write_text(text, encoding="utf-8")
        print(f"wrote {name}: {len(cf.lemmas)} lemmas, {len(cf.theorems)} theorems")
    validate(OUT_DIR)


if __name__ == "__main__":
    main()
