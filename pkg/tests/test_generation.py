from __future__ import annotations

import math

import numpy as np
import pytest

from proofcopilot.errors import EmptyInputError, InvalidParamError, ParseError
from proofcopilot.formula import Atom, parse_formula
from proofcopilot.generation import (
    BUILTIN_SCORES,
    EncoderSpec,
    GeneratorParams,
    GeneratorSpec,
    ScoredText,
    builtin_candidates,
    builtin_suggest,
    encode,
    generate,
    hash_encode,
    load_fixture,
    merge_params,
    rescale_temperature,
    sort_scored,
)
from proofcopilot.kernel import parse_goal, run_script
from proofcopilot.tactics import TacticKind, parse_script


def texts(items):
    return [st.text for st in items]


# -- params -----------------------------------------------------------------


def test_param_defaults():
    p = GeneratorParams()
    assert (p.num_return_sequences, p.temperature, p.min_score, p.max_length) == (4, 1.0, 0.0, 256)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_return_sequences": 0},
        {"num_return_sequences": 2.5},
        {"temperature": 0.0},
        {"temperature": -1.0},
        {"temperature": math.inf},
        {"min_score": -0.1},
        {"min_score": 1.5},
        {"max_length": 0},
    ],
)
def test_param_validation(kwargs):
    with pytest.raises(InvalidParamError):
        GeneratorParams(**kwargs)


def test_merge_params_overrides_and_rejects_unknown():
    merged = merge_params(GeneratorParams(), {"temperature": 2.0, "num_return_sequences": 9})
    assert merged.temperature == 2.0
    assert merged.num_return_sequences == 9
    assert merged.min_score == 0.0
    with pytest.raises(InvalidParamError):
        merge_params(GeneratorParams(), {"beam_width": 3})


def test_spec_constructors_validate():
    with pytest.raises(InvalidParamError):
        GeneratorSpec.external("m", "", 0)
    with pytest.raises(InvalidParamError):
        EncoderSpec.hash_trigram(dim=8)


# -- ordering ---------------------------------------------------------------


def test_sort_scored_descends_then_breaks_ties_by_text():
    items = [ScoredText("b", 0.5), ScoredText("a", 0.5), ScoredText("c", 0.9)]
    assert texts(sort_scored(items)) == ["c", "a", "b"]


def test_rescale_temperature_is_order_preserving():
    scores = [0.9, 0.5, 0.1]
    for t in (0.25, 0.5, 1.0, 2.0, 8.0):
        out = rescale_temperature(scores, t)
        assert out == sorted(out, reverse=True)
        assert out[0] == pytest.approx(0.9)
        assert all(0.0 < s <= 1.0 for s in out)


def test_high_temperature_compresses_spread():
    cold = rescale_temperature([0.9, 0.1], 0.5)
    hot = rescale_temperature([0.9, 0.1], 4.0)
    assert hot[0] - hot[1] < 0.9 - 0.1 < cold[0] - cold[1]


# -- builtin candidates -----------------------------------------------------


def candidate_map(goal_text, lemmas=None, scope=None):
    goal = parse_goal(goal_text)
    table = {k: parse_formula(v) for k, v in (lemmas or {}).items()}
    return builtin_candidates(goal, table, scope)


def test_trivial_proposed_only_for_true_target():
    cands = dict(candidate_map("|- True"))
    assert any(t.kind is TacticKind.TRIVIAL for t in cands)
    assert not any(
        t.kind is TacticKind.TRIVIAL for t, _ in candidate_map("h : A |- A")
    )


def test_exact_and_assumption_require_a_matching_hypothesis():
    kinds = [t.kind for t, _ in candidate_map("h : A, g : A |- A")]
    assert kinds.count(TacticKind.EXACT) == 2
    assert TacticKind.ASSUMPTION in kinds
    kinds = [t.kind for t, _ in candidate_map("h : B |- A")]
    assert TacticKind.EXACT not in kinds
    assert TacticKind.ASSUMPTION not in kinds


def test_intro_uses_a_fresh_binder():
    cands = candidate_map("h : A |- A -> B")
    intro = next(t for t, _ in cands if t.kind is TacticKind.INTRO)
    assert intro.arg == "h1"


def test_apply_proposed_per_matching_hypothesis_and_lemma():
    cands = candidate_map(
        "imp : A -> B |- B", lemmas={"mp": "C -> B", "other": "C -> A"}
    )
    applies = sorted(t.arg for t, _ in cands if t.kind is TacticKind.APPLY)
    assert applies == ["imp", "mp"]


def test_apply_respects_scope():
    cands = candidate_map("|- B", lemmas={"mp": "A -> B"}, scope=())
    assert not any(t.kind is TacticKind.APPLY for t, _ in cands)


def test_destructuring_and_disjunction_candidates():
    cands = candidate_map("h : A /\\ B, o : A \\/ C |- C \\/ A")
    kinds = [t.kind for t, _ in cands]
    assert kinds.count(TacticKind.CASES) == 2
    assert TacticKind.LEFT in kinds and TacticKind.RIGHT in kinds


def test_contradiction_candidate_needs_refutation():
    kinds = [t.kind for t, _ in candidate_map("p : A, np : ~A |- B")]
    assert TacticKind.CONTRADICTION in kinds
    kinds = [t.kind for t, _ in candidate_map("p : A |- B")]
    assert TacticKind.CONTRADICTION not in kinds


def test_exfalso_is_always_last_resort():
    for goal_text in ("|- A", "h : A |- True", "|- A -> B"):
        cands = candidate_map(goal_text)
        assert cands[-1][0].kind is TacticKind.EXFALSO
        assert cands[-1][1] == BUILTIN_SCORES[TacticKind.EXFALSO]


def test_scores_come_from_the_fixed_table():
    for t, s in candidate_map("h : A /\\ B |- A /\\ B", lemmas={"ax": "A /\\ B"}):
        assert s == BUILTIN_SCORES[t.kind]


def test_every_candidate_replays_through_the_kernel():
    goal_text = "h : A /\\ B, i : A -> C, f : False |- C /\\ A"
    goal = parse_goal(goal_text)
    lemmas = {"ax": parse_formula("B -> C /\\ A")}
    for tactic, _ in builtin_candidates(goal, lemmas):
        out = run_script(goal, parse_script(f"{tactic.kind.value} {tactic.arg or ''}".strip()), lemmas)
        assert out.error is None, f"{tactic} failed on {goal_text}"


# -- builtin_suggest and generate ------------------------------------------


def test_builtin_suggest_sorts_filters_and_truncates():
    goal = parse_goal("h : A |- A")
    out = builtin_suggest(goal, {}, GeneratorParams(num_return_sequences=2))
    assert texts(out) == ["exact h", "assumption"]
    out = builtin_suggest(goal, {}, GeneratorParams(min_score=0.5))
    assert "exfalso" not in texts(out)


def test_generate_builtin_parses_goal_text():
    out = generate(GeneratorSpec.builtin(), "h : A |- A")
    assert texts(out)[0] == "exact h"
    assert all(0.0 < st.score <= 1.0 for st in out)


def test_generate_builtin_on_unparseable_text_is_empty():
    assert generate(GeneratorSpec.builtin(), "what is a proof?") == []


def test_generate_rejects_empty_input():
    with pytest.raises(EmptyInputError):
        generate(GeneratorSpec.builtin(), "")


def test_generate_prefix_filters_candidates():
    out = generate(GeneratorSpec.builtin(), "h : A /\\ B |- A /\\ B", prefix="cases")
    assert texts(out) == ["cases h"]


def test_generate_scripted_fixture(tmp_path):
    fixture = tmp_path / "cands.tsv"
    fixture.write_text(
        "# goal\ttactic\tscore\n"
        "⊢ A\texact ax\t0.9\n"
        "⊢ A\tsplit\t0.2\n"
        "⊢ B\tassumption\t0.5\n",
        encoding="utf-8",
    )
    spec = GeneratorSpec.scripted(str(fixture))
    assert texts(generate(spec, "⊢ A")) == ["exact ax", "split"]
    assert texts(generate(spec, "⊢ B")) == ["assumption"]
    assert generate(spec, "⊢ C") == []


def test_load_fixture_rejects_bad_rows(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("just one field\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_fixture(str(bad))
    bad.write_text("g\tt\t1.5\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_fixture(str(bad))


def test_generate_dedupes_whitespace_variants(tmp_path):
    fixture = tmp_path / "dup.tsv"
    fixture.write_text("g\texact  h\t0.9\ng\texact h\t0.8\n", encoding="utf-8")
    out = generate(GeneratorSpec.scripted(str(fixture)), "g")
    assert len(out) == 1
    assert out[0].score == 0.9


# -- encoding ---------------------------------------------------------------


def test_hash_encode_is_deterministic_unit_norm():
    a = hash_encode("h : A -> B ⊢ B", 256)
    b = hash_encode("h : A -> B ⊢ B", 256)
    np.testing.assert_array_equal(a, b)
    assert a.dtype == np.float32
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-6)


def test_hash_encode_distinguishes_texts():
    a = hash_encode("⊢ A -> B", 64)
    b = hash_encode("⊢ B -> A", 64)
    assert not np.array_equal(a, b)


def test_hash_encode_short_text_is_zero_vector():
    v = hash_encode("ab", 32)
    assert v.shape == (32,)
    assert not v.any()


def test_encode_dispatches_and_validates():
    v = encode(EncoderSpec.hash_trigram(64), "⊢ A")
    assert v.shape == (64,)
    with pytest.raises(EmptyInputError):
        encode(EncoderSpec.hash_trigram(64), "")
