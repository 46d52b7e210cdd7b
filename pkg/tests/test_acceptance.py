"""Acceptance gate: one test per shipped guarantee, one PASS/FAIL line each.

Run with -s to watch the lines stream; without it they appear in the
captured output of whichever test fails.
"""

from __future__ import annotations

import json
import random
import subprocess
import threading
import time
from contextlib import contextmanager
from io import BytesIO
from pathlib import Path

import numpy as np
import pytest

import proofcopilot
from proofcopilot.bot import (
    build_pr_payload,
    patched_files,
    relativize,
    render_diff,
    repair_corpus,
    scan_sorries,
)
from proofcopilot.client import external_generate
from proofcopilot.corpus import load_corpus
from proofcopilot.formula import TRUTH, FALSITY, And, Atom, Formula, Imp, Or
from proofcopilot.generation import GeneratorParams, GeneratorSpec, generate
from proofcopilot.harness import (
    CollabRecord,
    benchmark_corpus,
    compute_metrics,
    default_tool_specs,
)
from proofcopilot.kernel import (
    Hypothesis,
    OutcomeStatus,
    ProofState,
    Sequent,
    apply_tactic,
    pretty_goal,
    run_script,
)
from proofcopilot.npyio import read_npy, write_npy
from proofcopilot.oracle import decide_sequent
from proofcopilot.premises import top_k
from proofcopilot.search import SearchLimits, SearchStatus, best_first_search, default_rule_set
from proofcopilot.service import ServiceConfig, make_server
from proofcopilot.suggest import (
    SuggestionCategory,
    categorize,
    parse_single_tactic,
    suggest_tactics,
)
from proofcopilot.errors import ParseError, TacticError
from proofcopilot.tactics import TacticKind

SHIPPED = Path(proofcopilot.__file__).parent / "data" / "corpus"
BUILTIN = GeneratorSpec.builtin()
GOLDEN_NPY = Path(__file__).parent / "data" / "golden_4x8.npy"


@contextmanager
def criterion(name: str):
    info = {"detail": "ok"}
    started = time.perf_counter()
    try:
        yield info
    except BaseException as e:
        print(f"FAIL {name}: {e}")
        raise
    elapsed = time.perf_counter() - started
    print(f"PASS {name}: {info['detail']} [{elapsed:.1f}s]")


# -- shared random goal generation ------------------------------------------

_LEAVES = (Atom("A"), Atom("B"), Atom("C"), Atom("D"), TRUTH, FALSITY)


def _random_formula(rng: random.Random, depth: int) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        return rng.choice(_LEAVES)
    ctor = rng.choice((And, Or, Imp))
    return ctor(_random_formula(rng, depth - 1), _random_formula(rng, depth - 1))


def _random_goal(rng: random.Random) -> Sequent:
    hyps = tuple(
        Hypothesis(f"h{i + 1}", _random_formula(rng, 2))
        for i in range(rng.randrange(3))
    )
    return Sequent(hyps, _random_formula(rng, 3))


# -- bot fixture: 10 sorries, 7 provable under scope, 3 not ------------------

BOT_BASE = """\
lemma base_step : BX -> BY
doc "Single step available to the repair fixture."

lemma base_mk : BM
"""

BOT_EDITS = """\
import base

theorem fill_id : A -> A
proof
  sorry
end

theorem fill_swap : A /\\ B -> B /\\ A
proof
  intro h
  cases h
  split
  sorry
  sorry
end

theorem fill_step : BX -> BY
proof
  sorry
end

theorem fill_mk : BM
proof
  sorry
end
"""

BOT_EXTRA = """\
theorem fill_residual : (A -> B) -> A -> B
proof
  intro f
  sorry
end

theorem fill_const : A -> True /\\ True
proof
  intro h
  sorry
end

theorem gap_choice : UA \\/ UB
proof
  sorry
end

theorem gap_lem : UP \\/ ~UP
proof
  sorry
end

theorem gap_peirce : ((UQ -> UR) -> UQ) -> UQ
proof
  sorry
end
"""

UNPROVABLE = {"gap_choice", "gap_lem", "gap_peirce"}


def _write_bot_repo(root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    (root / "base.thy").write_text(BOT_BASE, encoding="utf-8")
    (root / "edits.thy").write_text(BOT_EDITS, encoding="utf-8")
    (root / "extra.thy").write_text(BOT_EXTRA, encoding="utf-8")


@pytest.fixture(scope="session")
def bot_run(tmp_path_factory):
    """One repair pass over the sorry fixture, shared by the criteria."""
    root = tmp_path_factory.mktemp("bot") / "repo"
    _write_bot_repo(root)
    corpus = load_corpus(root)
    repairs, failures = repair_corpus(corpus, BUILTIN)
    return root, corpus, repairs, failures


def _oracle_provable(corpus, site) -> bool:
    cf = next(c for c in corpus.files if c.path == site.path)
    lemmas = corpus.scope_for(cf)
    hyps = tuple(Hypothesis(name, f) for name, f in lemmas.items())
    return decide_sequent(Sequent(hyps + site.goal.hypotheses, site.goal.target))


# -- criteria ----------------------------------------------------------------


def test_soundness_suite(bot_run):
    with criterion("Soundness suite") as info:
        started = time.perf_counter()
        rules = default_rule_set(use_generator=True)
        verified = 0

        corpus = load_corpus(SHIPPED)
        for cf, thm in corpus.theorems():
            lemmas = corpus.scope_for(cf)
            result = best_first_search(thm.goal(), rules, BUILTIN, lemmas, SearchLimits())
            assert result.status is SearchStatus.PROOF_FOUND, thm.name
            outcome = run_script(thm.goal(), result.script, lemmas)
            assert outcome.status is OutcomeStatus.PROVED, thm.name
            assert not outcome.used_sorry, thm.name
            verified += 1
        corpus_count = verified

        rng = random.Random(20260821)
        found = 0
        for _ in range(1000):
            goal = _random_goal(rng)
            result = best_first_search(goal, rules, BUILTIN, {}, SearchLimits())
            if result.status is SearchStatus.PROOF_FOUND:
                outcome = run_script(goal, result.script, {})
                assert outcome.status is OutcomeStatus.PROVED, pretty_goal(goal)
                assert not outcome.used_sorry, pretty_goal(goal)
                found += 1
                verified += 1
        assert found > 200, f"random searches found only {found} proofs"

        _, bot_corpus, repairs, _ = bot_run
        for repair in repairs:
            cf = next(c for c in bot_corpus.files if c.path == repair.site.path)
            lemmas = bot_corpus.scope_for(cf)
            outcome = run_script(repair.site.goal, repair.script, lemmas)
            assert outcome.status is OutcomeStatus.PROVED, repair.site.theorem_name
            assert not outcome.used_sorry, repair.site.theorem_name
            assert not any(s.kind is TacticKind.SORRY for s in repair.script.steps)
            verified += 1

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"soundness suite took {elapsed:.1f}s (budget 60s)"
        info["detail"] = (
            f"{corpus_count} corpus + {found}/1000 random + {len(repairs)} bot "
            f"proofs all kernel-verified without sorry"
        )


def _slice_formulas() -> list[Formula]:
    """Every goal formula with <= 3 distinct atoms and node count <= 7,
    atoms canonically named in first-occurrence order A, B, C."""
    leaves = (Atom("A"), Atom("B"), Atom("C"), TRUTH, FALSITY)
    by_size: dict[int, list[Formula]] = {1: list(leaves)}
    for n in range(2, 8):
        out: list[Formula] = []
        for left in range(1, n - 1):
            for lhs in by_size[left]:
                for rhs in by_size[n - 1 - left]:
                    out.extend((And(lhs, rhs), Or(lhs, rhs), Imp(lhs, rhs)))
        by_size[n] = out

    def canonical(f: Formula) -> bool:
        seen: list[str] = []
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, Atom):
                if g.name not in seen:
                    seen.append(g.name)
            elif isinstance(g, (And, Or, Imp)):
                stack.append(g.rhs)
                stack.append(g.lhs)
        return seen == ["A", "B", "C"][: len(seen)]

    return [f for n in range(1, 8) for f in by_size[n] if canonical(f)]


def test_oracle_agreement():
    with criterion("Oracle agreement") as info:
        started = time.perf_counter()
        formulas = _slice_formulas()
        assert len(formulas) == 20949  # enumeration is exhaustive, not sampled
        rules = default_rule_set(use_generator=True)
        limits = SearchLimits(max_expansions=800, max_depth=20, timeout_millis=5000)

        valid = proved = proved_valid = 0
        for f in formulas:
            goal = Sequent((), f)
            is_valid = decide_sequent(goal)
            valid += is_valid
            result = best_first_search(goal, rules, BUILTIN, {}, limits)
            if result.status is not SearchStatus.PROOF_FOUND:
                continue
            proved += 1
            assert is_valid, f"search proved an invalid goal: {pretty_goal(goal)}"
            outcome = run_script(goal, result.script, {})
            assert outcome.status is OutcomeStatus.PROVED and not outcome.used_sorry
            proved_valid += is_valid

        coverage = proved_valid / valid
        assert coverage >= 0.90, f"coverage {coverage:.2%} below 90%"
        elapsed = time.perf_counter() - started
        assert elapsed < 300.0, f"slice took {elapsed:.1f}s (budget 300s)"
        info["detail"] = (
            f"{len(formulas)} goals, {valid} valid, 0 unsound, "
            f"coverage {coverage:.2%} >= 90%"
        )


def test_benchmark_directional():
    with criterion("Benchmark directional") as info:
        corpus = load_corpus(SHIPPED)
        assert sum(1 for _ in corpus.theorems()) >= 50
        tools = default_tool_specs(BUILTIN)
        report = benchmark_corpus(corpus, tools)
        by_name = {t.name: t.metrics for t in report.tools}
        rules = by_name["RulesOnly"]
        suggest = by_name["SuggestOnly"]
        search = by_name["SearchWithGenerator"]

        assert search.avg_manual_tactics <= suggest.avg_manual_tactics
        assert suggest.avg_manual_tactics <= rules.avg_manual_tactics
        gap = search.pct_autonomous - rules.pct_autonomous
        assert gap >= 10.0, f"autonomy gap {gap:.1f}ppt below 10ppt"

        again = benchmark_corpus(corpus, tools)
        assert report.to_json() == again.to_json()
        info["detail"] = (
            f"manual {search.avg_manual_tactics:.2f} <= "
            f"{suggest.avg_manual_tactics:.2f} <= {rules.avg_manual_tactics:.2f}, "
            f"autonomy gap {gap:.0f}ppt, report bytes stable"
        )


def test_metrics_fixture():
    with criterion("Metrics fixture") as info:
        records = [
            CollabRecord("a", 2, 0, 0, True),
            CollabRecord("b", 4, 1, 1, True),
            CollabRecord("c", 1, 0, 0, True),
            CollabRecord("d", 5, 5, None, False),
        ]
        m = compute_metrics(records)
        assert m.avg_manual_tactics == 1.5
        assert m.pct_autonomous == 50.0
        assert m.avg_pct_automated == 68.75
        info["detail"] = "lengths (2,4,1,5) / manual (0,1,0,5) -> (1.5, 50.0, 68.75) exactly"


def _brute_force_top_k(matrix: np.ndarray, query: np.ndarray, k: int):
    scores = [
        np.float32(np.dot(row.astype(np.float64), query.astype(np.float64)))
        for row in matrix
    ]
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(i, float(scores[i])) for i in order[:k]]


def test_premise_retrieval():
    with criterion("Premise retrieval") as info:
        rng = np.random.default_rng(97)
        for trial in range(100):
            rows = int(rng.integers(1, 501))
            dim = int(rng.integers(1, 257))
            k = int(rng.integers(1, rows + 4))
            # low-precision values force score ties through the tie rule
            matrix = (
                rng.integers(-2, 3, size=(rows, dim)).astype(np.float32)
                if trial % 3 == 0
                else rng.standard_normal((rows, dim)).astype(np.float32)
            )
            query = rng.standard_normal(dim).astype(np.float32)
            assert top_k(matrix, query, k) == _brute_force_top_k(matrix, query, k), (
                f"trial {trial}: {rows}x{dim}, k={k}"
            )

        for shape in ((1, 1), (3, 4), (0, 5), (257, 63)):
            matrix = rng.standard_normal(shape).astype(np.float32)
            sink = BytesIO()
            write_npy(matrix, sink)
            ours = sink.getvalue()
            again = read_npy(BytesIO(ours))
            assert again.dtype == np.float32 and again.shape == matrix.shape
            assert np.array_equal(again, matrix)
            resink = BytesIO()
            write_npy(again, resink)
            assert resink.getvalue() == ours
            oracle = BytesIO()
            np.save(oracle, matrix)
            assert ours == oracle.getvalue()

        golden = (
            np.arange(32, dtype=np.float32).reshape(4, 8) * np.float32(0.25)
        ) - np.float32(3.5)
        sink = BytesIO()
        write_npy(golden, sink)
        stored = GOLDEN_NPY.read_bytes()
        assert sink.getvalue() == stored
        assert np.array_equal(read_npy(BytesIO(stored)), golden)
        info["detail"] = (
            "100 random top-k matrices match brute force (ties included), "
            "NPY round-trips byte-identical, golden 4x8 bytes match"
        )


@pytest.fixture()
def loopback_server():
    server = make_server(ServiceConfig())
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield host, port
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def test_protocol_conformance(loopback_server):
    with criterion("Protocol conformance") as info:
        import http.client

        host, port = loopback_server
        inputs = [
            "⊢ True",
            "h : A /\\ B ⊢ B /\\ A",
            "x : A -> B, y : A ⊢ B",
            "⊢ (A -> B) -> A -> B",
            "k : A \\/ B ⊢ B \\/ A",
        ]
        param_sets = [
            GeneratorParams(),
            GeneratorParams(num_return_sequences=4, temperature=0.25),
            GeneratorParams(num_return_sequences=32, temperature=2.0, min_score=0.5),
        ]
        compared = 0
        for input_text in inputs:
            for params in param_sets:
                for prefix in ("", "apply"):
                    remote = external_generate(
                        "builtin", host, port, input_text, prefix, params
                    )
                    local = generate(GeneratorSpec.builtin(params), input_text, prefix)
                    assert remote == local, (input_text, prefix)
                    compared += 1

        def status_of(path: str, raw: bytes) -> int:
            conn = http.client.HTTPConnection(host, port, timeout=10)
            try:
                conn.request("POST", path, body=raw,
                             headers={"Content-Type": "application/json"})
                resp = conn.getresponse()
                resp.read()
                return resp.status
            finally:
                conn.close()

        def expect(path: str, body, code: int) -> None:
            raw = body if isinstance(body, bytes) else json.dumps(body).encode()
            got = status_of(path, raw)
            assert got == code, f"{path} {body!r}: expected {code}, got {got}"

        expect("/api/generate", b"not json", 400)
        expect("/api/generate", [1, 2], 400)
        expect("/api/generate", {"input": "⊢ A"}, 400)
        expect("/api/generate", {"name": 5, "input": "⊢ A"}, 400)
        expect("/api/generate", {"name": "builtin"}, 400)
        expect("/api/generate", {"name": "builtin", "input": "⊢ A", "params": {"x": 1}}, 400)
        expect("/api/generate", {"name": "elsewhere", "input": "⊢ A"}, 404)
        expect("/api/encode", {"name": "builtin", "input": ""}, 400)
        expect("/api/encode", {"name": "elsewhere", "input": "x"}, 404)
        info["detail"] = (
            f"{compared} loopback generate calls identical to direct builtin, "
            "malformed bodies return the documented 400/404"
        )


def test_bot_end_to_end(bot_run, tmp_path):
    with criterion("Bot end-to-end") as info:
        root, corpus, repairs, failures = bot_run
        sites = scan_sorries(corpus)
        assert len(sites) == 10
        provable = {s.theorem_name for s in sites if _oracle_provable(corpus, s)}
        assert provable == {s.theorem_name for s in sites} - UNPROVABLE

        assert len(repairs) == 7, f"expected 7 verified patches, got {len(repairs)}"
        assert len(failures) == 3
        assert {site.theorem_name for site, _ in failures} == UNPROVABLE
        assert all(r.patch.verified for r in repairs)

        rel = relativize(repairs, root)
        originals = {
            "base.thy": BOT_BASE,
            "edits.thy": BOT_EDITS,
            "extra.thy": BOT_EXTRA,
        }
        diff = render_diff(rel, originals)
        payload = build_pr_payload(rel, originals)
        assert len(payload.files) == 2  # base.thy had nothing to repair

        clone = tmp_path / "clone"
        clone.mkdir()
        for name, text in originals.items():
            (clone / name).write_text(text, encoding="utf-8")
        proc = subprocess.run(
            ["patch", "-p1"], input=diff.encode("utf-8"), cwd=clone, capture_output=True
        )
        assert proc.returncode == 0, proc.stderr.decode()
        expected = patched_files(rel, originals)
        for name in originals:
            on_disk = (clone / name).read_text(encoding="utf-8")
            assert on_disk == expected.get(name, originals[name]), name

        final = tmp_path / "final"
        final.mkdir()
        for name, text in originals.items():
            (final / name).write_text(expected.get(name, text), encoding="utf-8")
        patched_corpus = load_corpus(final)  # validate=True replays everything
        second = scan_sorries(patched_corpus)
        assert len(second) == 3
        assert {s.theorem_name for s in second} == UNPROVABLE
        info["detail"] = (
            "10 sorries scanned, oracle splits 7/3, exactly 7 verified patches, "
            "diff applies byte-exactly, patched corpus revalidates, "
            "second scan finds the 3 unprovable sites"
        )


_TRICHOTOMY_LEMMAS = {
    "lem_ab": Imp(Atom("A"), Atom("B")),
    "lem_b": Atom("B"),
    "lem_pair": And(Atom("A"), Atom("B")),
}

_GARBAGE = (
    "",
    "frobnicate",
    "intro",
    "exact",
    "cases",
    "intro h; exact h",
    "split extra",
    "apply 1bad",
    "-- nothing but a comment",
)


def _random_candidate(rng: random.Random, state: ProofState) -> str:
    roll = rng.random()
    if roll < 0.25:
        return rng.choice(_GARBAGE)
    names = [h.name for g in state.goals for h in g.hypotheses]
    names += list(_TRICHOTOMY_LEMMAS)
    names += ["nope", "h9", "h1.1"]
    kind = rng.choice(
        ("intro", "exact", "apply", "cases", "split", "left", "right",
         "trivial", "assumption", "contradiction", "exfalso", "sorry")
    )
    if kind in ("intro", "exact", "apply", "cases"):
        return f"{kind} {rng.choice(names)}" if names else kind
    return kind


def test_suggestion_trichotomy():
    with criterion("Suggestion trichotomy") as info:
        rng = random.Random(8211)
        lemmas = _TRICHOTOMY_LEMMAS
        scope = tuple(lemmas)
        counts = {"closing": 0, "valid": 0, "error": 0}

        for _ in range(500):
            goals = tuple(_random_goal(rng) for _ in range(rng.randrange(1, 3)))
            state = ProofState(goals, scope, False)
            text = _random_candidate(rng, state)
            got = categorize(state, text, lemmas)
            try:
                tactic = parse_single_tactic(text)
                successor = apply_tactic(state, tactic, lemmas)
            except (ParseError, TacticError) as e:
                assert got.is_error, f"{text!r} should be an error on {state.goals[0]}"
                assert got.error == str(e)
                assert got.remaining == ()
                counts["error"] += 1
            else:
                if successor.goals:
                    assert got.category is SuggestionCategory.VALID_STEP, text
                    assert got.remaining == successor.goals
                    counts["valid"] += 1
                else:
                    assert got.category is SuggestionCategory.PROOF_CLOSING, text
                    assert got.remaining == ()
                    counts["closing"] += 1
        assert all(counts.values()), f"a category went unexercised: {counts}"

        replayed = 0
        for _ in range(60):
            state = ProofState((_random_goal(rng),), scope, False)
            result = suggest_tactics(state, BUILTIN, lemmas, check=True)
            assert result.checked
            for s in result.suggestions:
                tactic = parse_single_tactic(s.tactic_text)  # must not raise
                assert tactic.kind is not TacticKind.SORRY
                successor = apply_tactic(state, tactic, lemmas)  # must not raise
                assert s.remaining == successor.goals
                assert (s.category is SuggestionCategory.PROOF_CLOSING) == (
                    not successor.goals
                )
                replayed += 1
        info["detail"] = (
            f"500 pairs agree with the kernel "
            f"(closing {counts['closing']} / valid {counts['valid']} / "
            f"error {counts['error']}), {replayed} checked suggestions replay clean"
        )
