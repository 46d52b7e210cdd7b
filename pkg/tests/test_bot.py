"""Sorry scanning, repair verification, diffs, and submission plumbing."""

from __future__ import annotations

import datetime
import json
import subprocess
from pathlib import Path

import pytest

from proofcopilot.bot import (
    DryRunHost,
    GitHostClient,
    Patch,
    PrPayload,
    Repair,
    SorrySite,
    attempt_repair,
    build_pr_payload,
    patched_files,
    relativize,
    render_diff,
    repair_corpus,
    scan_file,
    scan_sorries,
    submit,
)
from proofcopilot.corpus import load_corpus
from proofcopilot.errors import (
    HostError,
    InvalidPrefixError,
    NoPatchesError,
    SearchFailedError,
    UnverifiedPatchError,
)
from proofcopilot.kernel import OutcomeStatus, pretty_goal, run_script
from proofcopilot.search import SearchLimits
from proofcopilot.tactics import render_tactic

LIB = "lemma lib_fact : L1\n"

HOLES = """\
import lib

theorem gap_swap : A /\\ B -> B /\\ A
proof
  intro h
  cases h
  split
  sorry
  sorry
end

theorem gap_lemma : L1
proof
  sorry
end

theorem stuck_choice : A \\/ B
proof
  sorry
end
"""


def _bslice(text: str, span: tuple[int, int]) -> str:
    return text.encode("utf-8")[span[0] : span[1]].decode("utf-8")


def _make_corpus(tmp_path: Path):
    (tmp_path / "holes.thy").write_text(HOLES, encoding="utf-8")
    (tmp_path / "lib.thy").write_text(LIB, encoding="utf-8")
    return load_corpus(tmp_path)


def test_scan_file_finds_sites_in_byte_order(tmp_path):
    corpus = _make_corpus(tmp_path)
    holes = next(cf for cf in corpus.files if cf.module == "holes")
    sites = scan_file(holes, corpus.scope_for(holes))
    assert [s.theorem_name for s in sites] == [
        "gap_swap",
        "gap_swap",
        "gap_lemma",
        "stuck_choice",
    ]
    assert [s.step_index for s in sites] == [3, 4, 0, 0]
    spans = [s.byte_span for s in sites]
    assert spans == sorted(spans)
    for site in sites:
        assert _bslice(holes.text, site.byte_span) == "sorry"


def test_scan_reconstructs_the_hidden_goal(tmp_path):
    corpus = _make_corpus(tmp_path)
    holes = next(cf for cf in corpus.files if cf.module == "holes")
    sites = scan_file(holes, corpus.scope_for(holes))
    assert pretty_goal(sites[0].goal) == "h.1 : A, h.2 : B ⊢ B"
    assert pretty_goal(sites[1].goal) == "h.1 : A, h.2 : B ⊢ A"
    assert pretty_goal(sites[2].goal) == "⊢ L1"
    assert pretty_goal(sites[3].goal) == "⊢ A \\/ B"


def test_scan_sorries_orders_across_files(tmp_path):
    (tmp_path / "b_late.thy").write_text(
        "theorem late : Z -> Z\nproof\n  sorry\nend\n", encoding="utf-8"
    )
    (tmp_path / "a_early.thy").write_text(
        "theorem early : Y -> Y\nproof\n  sorry\nend\n", encoding="utf-8"
    )
    corpus = load_corpus(tmp_path)
    sites = scan_sorries(corpus)
    assert [s.theorem_name for s in sites] == ["early", "late"]
    assert sites[0].path.endswith("a_early.thy")


def test_scan_skips_file_where_sorry_follows_a_closed_proof(tmp_path):
    (tmp_path / "weird.thy").write_text(
        "theorem done : W -> W\nproof\n  intro h\n  exact h\n  sorry\nend\n",
        encoding="utf-8",
    )
    (tmp_path / "ok.thy").write_text(
        "theorem open_site : V -> V\nproof\n  sorry\nend\n", encoding="utf-8"
    )
    corpus = load_corpus(tmp_path, validate=False)
    with pytest.warns(UserWarning, match="skipping"):
        sites = scan_sorries(corpus)
    assert [s.theorem_name for s in sites] == ["open_site"]


def test_attempt_repair_produces_verified_patch(tmp_path):
    corpus = _make_corpus(tmp_path)
    holes = next(cf for cf in corpus.files if cf.module == "holes")
    site = next(s for s in scan_file(holes, corpus.scope_for(holes))
                if s.theorem_name == "gap_lemma")
    repair = attempt_repair(corpus, site, None)
    assert repair.patch.verified
    assert repair.patch.byte_span == site.byte_span
    assert repair.patch.replacement_text == "; ".join(
        render_tactic(step) for step in repair.script.steps
    )
    assert repair.expansions >= 1
    outcome = run_script(site.goal, repair.script, corpus.scope_for(holes))
    assert outcome.status is OutcomeStatus.PROVED and not outcome.used_sorry


def test_attempt_repair_fails_on_unprovable_goal(tmp_path):
    corpus = _make_corpus(tmp_path)
    holes = next(cf for cf in corpus.files if cf.module == "holes")
    site = next(s for s in scan_file(holes, corpus.scope_for(holes))
                if s.theorem_name == "stuck_choice")
    with pytest.raises(SearchFailedError, match="stuck_choice"):
        attempt_repair(corpus, site, None, limits=SearchLimits(100, 10, 5000))


def test_repair_corpus_separates_repairs_from_failures(tmp_path):
    corpus = _make_corpus(tmp_path)
    repairs, failures = repair_corpus(corpus, None)
    assert sorted(r.site.theorem_name for r in repairs) == [
        "gap_lemma",
        "gap_swap",
        "gap_swap",
    ]
    assert [site.theorem_name for site, _ in failures] == ["stuck_choice"]
    assert all(isinstance(err, SearchFailedError) for _, err in failures)


def test_patched_files_touch_only_the_spans(tmp_path):
    corpus = _make_corpus(tmp_path)
    repairs, _ = repair_corpus(corpus, None)
    originals = {cf.path: cf.text for cf in corpus.files}
    patched = patched_files(repairs, originals)
    (path,) = patched
    assert path.endswith("holes.thy")
    new_text = patched[path]
    assert "gap_swap" in new_text and "stuck_choice" in new_text
    # the unprovable theorem keeps its sorry; patched sites lose theirs
    assert new_text.count("sorry") == 1
    # everything outside the three patched spans is byte-identical
    expected = HOLES
    for repair in sorted(repairs, key=lambda r: r.patch.byte_span[0], reverse=True):
        a, b = repair.patch.byte_span
        raw = expected.encode("utf-8")
        expected = (
            raw[:a] + repair.patch.replacement_text.encode("utf-8") + raw[b:]
        ).decode("utf-8")
    assert new_text == expected


def test_patched_corpus_revalidates(tmp_path):
    corpus = _make_corpus(tmp_path)
    repairs, _ = repair_corpus(corpus, None)
    for path, text in patched_files(repairs, {cf.path: cf.text for cf in corpus.files}).items():
        Path(path).write_text(text, encoding="utf-8")
    reloaded = load_corpus(tmp_path)  # validate replays every proof
    sites = scan_sorries(reloaded)
    assert [s.theorem_name for s in sites] == ["stuck_choice"]


def test_patched_files_reject_unverified_patch():
    patch = Patch("x.thy", (0, 5), "trivial", False)
    site = SorrySite("x.thy", "t", 0, None, (0, 5))
    repair = Repair(site, patch, None, 1)
    with pytest.raises(UnverifiedPatchError):
        patched_files([repair], {"x.thy": "sorry\n"})


def test_overlapping_patch_spans_rejected():
    def fake(span):
        return Repair(
            SorrySite("x.thy", "t", 0, None, span),
            Patch("x.thy", span, "trivial", True),
            None,
            1,
        )

    with pytest.raises(ValueError, match="overlapping"):
        patched_files([fake((0, 5)), fake((3, 8))], {"x.thy": "sorrysorry\n"})


def test_render_diff_applies_with_patch_tool(tmp_path):
    work = tmp_path / "repo"
    work.mkdir()
    (work / "holes.thy").write_text(HOLES, encoding="utf-8")
    (work / "lib.thy").write_text(LIB, encoding="utf-8")
    corpus = load_corpus(work)
    repairs, _ = repair_corpus(corpus, None)
    repairs = relativize(repairs, work)
    originals = {"holes.thy": HOLES, "lib.thy": LIB}
    diff = render_diff(repairs, originals)
    assert diff.startswith("--- a/holes.thy")
    assert "+++ b/holes.thy" in diff

    proc = subprocess.run(
        ["patch", "-p1"],
        input=diff.encode("utf-8"),
        cwd=work,
        capture_output=True,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    expected = patched_files(repairs, originals)
    assert (work / "holes.thy").read_text(encoding="utf-8") == expected["holes.thy"]
    assert (work / "lib.thy").read_text(encoding="utf-8") == LIB


def test_relativize_rewrites_paths(tmp_path):
    corpus = _make_corpus(tmp_path)
    repairs, _ = repair_corpus(corpus, None)
    rel = relativize(repairs, tmp_path)
    assert {r.patch.path for r in rel} == {"holes.thy"}
    assert {r.site.path for r in rel} == {"holes.thy"}
    # spans and scripts survive untouched
    assert [r.patch.byte_span for r in rel] == [r.patch.byte_span for r in repairs]


def _relative_repairs(tmp_path):
    corpus = _make_corpus(tmp_path)
    repairs, _ = repair_corpus(corpus, None)
    return relativize(repairs, tmp_path), {"holes.thy": HOLES, "lib.thy": LIB}


def test_build_pr_payload_shape(tmp_path):
    repairs, originals = _relative_repairs(tmp_path)
    payload = build_pr_payload(repairs, originals, when=datetime.date(2026, 8, 21))
    assert payload.title == "Complete 3 sorry proofs"
    assert payload.branch_name == "copilot/fix-sorries-2026-08-21"
    assert "`gap_lemma` (holes.thy)" in payload.body
    assert "search expansions:" in payload.body
    (pair,) = payload.files
    assert pair[0] == "holes.thy"

    doc = json.loads(payload.to_json())
    assert list(doc) == ["title", "body", "branchName", "files"]
    assert list(doc["files"][0]) == ["path", "newContent"]


def test_build_pr_payload_deterministic(tmp_path):
    repairs, originals = _relative_repairs(tmp_path)
    when = datetime.date(2026, 1, 2)
    a = build_pr_payload(repairs, originals, when=when).to_json()
    b = build_pr_payload(list(reversed(repairs)), originals, when=when).to_json()
    assert a == b


def test_build_pr_payload_rejects_empty():
    with pytest.raises(NoPatchesError):
        build_pr_payload([], {}, when=datetime.date(2026, 1, 2))


def test_singular_title(tmp_path):
    repairs, originals = _relative_repairs(tmp_path)
    one = [repairs[0]]
    payload = build_pr_payload(one, originals, when=datetime.date(2026, 1, 2))
    assert payload.title == "Complete 1 sorry proof"


def test_dry_run_host_writes_artifacts(tmp_path):
    repairs, originals = _relative_repairs(tmp_path)
    payload = build_pr_payload(repairs, originals, when=datetime.date(2026, 8, 21))
    diff = render_diff(repairs, originals)
    out = tmp_path / "out"
    result = submit(DryRunHost(out), payload, diff)
    assert result.kind == "dry-run"
    assert (out / "pr_payload.json").read_text(encoding="utf-8") == payload.to_json()
    assert (out / "changes.diff").read_text(encoding="utf-8") == diff


def test_git_host_refuses_without_token(tmp_path):
    repairs, originals = _relative_repairs(tmp_path)
    payload = build_pr_payload(repairs, originals, when=datetime.date(2026, 8, 21))
    client = GitHostClient("https://example.invalid")
    with pytest.raises(HostError) as exc:
        submit(client, payload, "")
    assert exc.value.status == "Auth"


def test_submit_rejects_payload_without_files(tmp_path):
    empty = PrPayload("t", "b", "branch", ())
    with pytest.raises(NoPatchesError):
        submit(DryRunHost(tmp_path), empty, "")
