"""Sorry-repair bot: scan, search, verify, splice, diff, and PR payload.

The pipeline finds every `sorry` step in a corpus, reconstructs the goal
it papers over by replaying the ground-truth prefix, and runs best-first
search on that goal. A found proof is only accepted after a two-part
verification gate: the sub-script alone must close the site's goal with
no sorry in it, and the whole file, with the replacement spliced over
the sorry's exact byte span, must re-parse and re-replay to Proved,
admitting sorry usage only from sites not repaired yet. Nothing outside
the patched spans is ever touched, so the unified diff applies with a
stock patch tool and reproduces the repaired files byte for byte.

Submission goes through a host-client interface. The default DryRunHost
just writes `pr_payload.json` and `changes.diff` to a directory; the
GitHostClient placeholder refuses to run without a token so nothing
leaves the machine unconfigured.
"""

from __future__ import annotations

import difflib
import json
import posixpath
import warnings
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .corpus import Corpus, CorpusFile, TheoremEntry, parse_theorem_file, replay_prefix
from .errors import (
    CopilotError,
    HostError,
    InvalidPrefixError,
    NoGoalsError,
    NoPatchesError,
    SearchFailedError,
    UnverifiedPatchError,
    VerificationFailedError,
)
from .formula import Formula
from .generation import GeneratorSpec
from .kernel import OutcomeStatus, Sequent, pretty_goal, run_script
from .search import RuleSet, SearchLimits, SearchStatus, best_first_search, default_rule_set
from .tactics import TacticKind, TacticScript, render_tactic


@dataclass(frozen=True, slots=True)
class SorrySite:
    """One sorry step: where it sits in the file and what it hides."""

    path: str
    theorem_name: str
    step_index: int
    goal: Sequent
    byte_span: tuple[int, int]


@dataclass(frozen=True, slots=True)
class Patch:
    path: str
    byte_span: tuple[int, int]
    replacement_text: str
    verified: bool


@dataclass(frozen=True, slots=True)
class Repair:
    """A verified patch plus the evidence behind it."""

    site: SorrySite
    patch: Patch
    script: TacticScript
    expansions: int


def _sorry_count(entry: TheoremEntry) -> int:
    return sum(1 for step in entry.script.steps if step.kind is TacticKind.SORRY)


def scan_file(cf: CorpusFile, lemmas: Mapping[str, Formula]) -> list[SorrySite]:
    """Sites for one file in byte-offset order; prefix replay per site."""
    sites: list[SorrySite] = []
    for entry in cf.theorems:
        for index, step in enumerate(entry.script.steps):
            if step.kind is not TacticKind.SORRY:
                continue
            state = replay_prefix(entry, index, lemmas)
            if not state.goals:
                raise InvalidPrefixError(
                    index, NoGoalsError(f"{entry.name}: sorry with no goals left")
                )
            sites.append(
                SorrySite(cf.path, entry.name, index, state.goals[0], entry.step_spans[index])
            )
    sites.sort(key=lambda s: s.byte_span[0])
    return sites


def scan_sorries(corpus: Corpus) -> list[SorrySite]:
    """All sites across the corpus, ordered by path then byte offset.

    A file whose replay breaks is reported with a warning and skipped;
    one bad file should not block repairs elsewhere.
    """
    sites: list[SorrySite] = []
    for cf in sorted(corpus.files, key=lambda c: c.path):
        try:
            sites.extend(scan_file(cf, corpus.scope_for(cf)))
        except InvalidPrefixError as e:
            warnings.warn(f"skipping {cf.path}: {e}", stacklevel=2)
    return sites


def _splice(text: str, patches: Sequence[Patch]) -> str:
    """Apply patches (byte spans into text) in one pass; spans must not overlap."""
    raw = text.encode("utf-8")
    ordered = sorted(patches, key=lambda p: p.byte_span[0])
    pieces: list[bytes] = []
    cursor = 0
    for patch in ordered:
        a, b = patch.byte_span
        if a < cursor:
            raise ValueError(f"overlapping patch spans at byte {a}")
        pieces.append(raw[cursor:a])
        pieces.append(patch.replacement_text.encode("utf-8"))
        cursor = b
    pieces.append(raw[cursor:])
    return b"".join(pieces).decode("utf-8")


def attempt_repair(
    corpus: Corpus,
    site: SorrySite,
    generator: GeneratorSpec | None,
    limits: SearchLimits = SearchLimits(),
    rules: RuleSet | None = None,
) -> Repair:
    """Search the site's goal and verify the splice before accepting it."""
    cf = next(c for c in corpus.files if c.path == site.path)
    lemmas = corpus.scope_for(cf)
    rule_set = rules if rules is not None else default_rule_set(use_generator=generator is not None)
    result = best_first_search(site.goal, rule_set, generator, lemmas, limits)
    if result.status is not SearchStatus.PROOF_FOUND or result.script is None:
        raise SearchFailedError(
            f"{site.theorem_name}: search ended {result.status.value} "
            f"after {result.expansions} expansions"
        )
    sub = result.script
    # gate (a): the sub-script alone closes the site goal, no sorry inside
    if any(step.kind is TacticKind.SORRY for step in sub.steps):
        raise VerificationFailedError(f"{site.theorem_name}: found script contains sorry")
    alone = run_script(site.goal, sub, lemmas)
    if alone.status is not OutcomeStatus.PROVED or alone.used_sorry:
        raise VerificationFailedError(f"{site.theorem_name}: script does not close the goal")
    replacement = "; ".join(render_tactic(step) for step in sub.steps)
    patch = Patch(site.path, site.byte_span, replacement, False)
    # gate (b): the patched file replays; sorry only at still-unpatched sites
    old_entry = next(t for t in cf.theorems if t.name == site.theorem_name)
    patched_text = _splice(cf.text, [patch])
    try:
        new_cf = parse_theorem_file(patched_text, cf.path)
        new_entry = next(t for t in new_cf.theorems if t.name == site.theorem_name)
    except (CopilotError, StopIteration) as e:
        raise VerificationFailedError(f"{site.theorem_name}: splice broke the file: {e}") from e
    remaining = _sorry_count(new_entry)
    if remaining != _sorry_count(old_entry) - 1:
        raise VerificationFailedError(f"{site.theorem_name}: splice changed other steps")
    outcome = run_script(new_entry.goal(), new_entry.script, lemmas)
    if outcome.status is not OutcomeStatus.PROVED:
        raise VerificationFailedError(f"{site.theorem_name}: patched replay not proved")
    if outcome.used_sorry != (remaining > 0):
        raise VerificationFailedError(f"{site.theorem_name}: unexpected sorry usage")
    return Repair(site, Patch(site.path, site.byte_span, replacement, True), sub, result.expansions)


def repair_corpus(
    corpus: Corpus,
    generator: GeneratorSpec | None,
    limits: SearchLimits = SearchLimits(),
    rules: RuleSet | None = None,
) -> tuple[list[Repair], list[tuple[SorrySite, CopilotError]]]:
    """Scan and attempt every site; returns repairs and per-site failures.

    Sites are independent even within one theorem: a sorry closes its
    goal during prefix replay exactly as a real proof would, so goals
    scanned from the pristine text stay correct as earlier sites get
    patched, and all byte spans refer to the original files.
    """
    repairs: list[Repair] = []
    failures: list[tuple[SorrySite, CopilotError]] = []
    for site in scan_sorries(corpus):
        try:
            repairs.append(attempt_repair(corpus, site, generator, limits, rules))
        except (SearchFailedError, VerificationFailedError) as e:
            failures.append((site, e))
    return repairs, failures


def _check_verified(patches: Iterable[Patch]) -> None:
    for patch in patches:
        if not patch.verified:
            raise UnverifiedPatchError(f"unverified patch for {patch.path}")


def patched_files(
    repairs: Sequence[Repair], originals: Mapping[str, str]
) -> dict[str, str]:
    """Final text per repaired path, all of a file's patches applied."""
    _check_verified(r.patch for r in repairs)
    by_path: dict[str, list[Patch]] = {}
    for repair in repairs:
        by_path.setdefault(repair.patch.path, []).append(repair.patch)
    return {
        path: _splice(originals[path], patches)
        for path, patches in sorted(by_path.items())
    }


def render_diff(repairs: Sequence[Repair], originals: Mapping[str, str]) -> str:
    """Unified diff over all repairs, 3 context lines, paths under a/ and b/."""
    chunks: list[str] = []
    for path, new_text in patched_files(repairs, originals).items():
        old_text = originals[path]
        diff = difflib.unified_diff(
            old_text.splitlines(keepends=True),
            new_text.splitlines(keepends=True),
            fromfile=f"a/{path}",
            tofile=f"b/{path}",
            n=3,
        )
        chunks.extend(diff)
    return "".join(chunks)


@dataclass(frozen=True, slots=True)
class PrPayload:
    title: str
    body: str
    branch_name: str
    files: tuple[tuple[str, str], ...]

    def to_json(self) -> str:
        payload = {
            "title": self.title,
            "body": self.body,
            "branchName": self.branch_name,
            "files": [{"path": p, "newContent": c} for p, c in self.files],
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def relativize(repairs: Sequence[Repair], root: str | Path) -> list[Repair]:
    """Rewrite repair paths relative to root, POSIX-style, for diffs and PRs."""
    root = Path(root).resolve()
    out: list[Repair] = []
    for repair in repairs:
        rel = posixpath.join(*Path(repair.patch.path).resolve().relative_to(root).parts)
        out.append(
            Repair(
                SorrySite(rel, repair.site.theorem_name, repair.site.step_index,
                          repair.site.goal, repair.site.byte_span),
                Patch(rel, repair.patch.byte_span, repair.patch.replacement_text,
                      repair.patch.verified),
                repair.script,
                repair.expansions,
            )
        )
    return out


def build_pr_payload(
    repairs: Sequence[Repair],
    originals: Mapping[str, str],
    when: date | None = None,
) -> PrPayload:
    """Deterministic PR payload; pass a fixed date for reproducible runs."""
    if not repairs:
        raise NoPatchesError("nothing to submit: no verified repairs")
    _check_verified(r.patch for r in repairs)
    stamp = when if when is not None else datetime.now(timezone.utc).date()
    files = tuple(sorted(patched_files(repairs, originals).items()))
    count = len(repairs)
    lines = [
        f"This change completes {count} proof{'s' if count != 1 else ''} "
        "previously left as `sorry`. Each proof was found by best-first "
        "search and re-verified by the kernel after splicing.",
        "",
    ]
    for repair in sorted(repairs, key=lambda r: (r.patch.path, r.patch.byte_span[0])):
        lines.append(f"- `{repair.site.theorem_name}` ({repair.patch.path})")
        lines.append(f"  - goal: `{pretty_goal(repair.site.goal)}`")
        lines.append(f"  - proof: `{repair.patch.replacement_text}`")
        lines.append(f"  - search expansions: {repair.expansions}")
    return PrPayload(
        title=f"Complete {count} sorry proof{'s' if count != 1 else ''}",
        body="\n".join(lines),
        branch_name=f"copilot/fix-sorries-{stamp.isoformat()}",
        files=files,
    )


@dataclass(frozen=True, slots=True)
class SubmitResult:
    kind: str
    detail: str


class HostClient(Protocol):
    def submit(self, payload: PrPayload, diff: str) -> SubmitResult: ...


class DryRunHost:
    """Writes the payload and diff to a directory instead of any network."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)

    def submit(self, payload: PrPayload, diff: str) -> SubmitResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "pr_payload.json").write_text(payload.to_json(), encoding="utf-8")
        (self.out_dir / "changes.diff").write_text(diff, encoding="utf-8")
        return SubmitResult("dry-run", str(self.out_dir))


class GitHostClient:
    """Placeholder for a real git host; refuses to run unconfigured."""

    def __init__(self, base_url: str, token: str | None = None):
        self.base_url = base_url
        self.token = token

    def submit(self, payload: PrPayload, diff: str) -> SubmitResult:
        if not self.token:
            raise HostError("Auth", "no access token configured")
        raise HostError("Unsupported", "real host submission is not wired up")


def submit(client: HostClient, payload: PrPayload, diff: str) -> SubmitResult:
    if not payload.files:
        raise NoPatchesError("payload has no files")
    return client.submit(payload, diff)
