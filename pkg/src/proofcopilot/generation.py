"""Candidate generation and goal encoding behind one interface.

Three generator kinds share the ScoredText contract (descending score,
ties broken by text, scores in (0, 1]):

* builtin: a deterministic heuristic that reads the goal's shape and
  proposes every tactic the kernel could accept, scored from a fixed
  table. Used directly (with a lemma table) by suggest and search, and
  text-only behind the wire protocol.
* scripted: replays a TSV fixture (`goal text<TAB>tactic<TAB>score`, one
  candidate per line) keyed by exact goal text. Test double for a model.
* external: defers to a model server over the wire protocol (client.py).

Encoders map text to fixed-dimension float32 vectors: hash-trigram (FNV-1a
over byte trigrams, L2-normalized, bit-reproducible everywhere) or an
external server. Temperature reshapes builtin score spread only; scripted
fixtures are taken literally and external servers apply their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import backends
from .errors import EmptyInputError, InvalidParamError, ParseError
from .formula import FALSITY, TRUTH, And, Falsity, Formula, Imp, Or
from .kernel import Sequent, _has_contradiction, fresh_name, parse_goal
from .tactics import Tactic, TacticKind, render_tactic


@dataclass(frozen=True, slots=True)
class GeneratorParams:
    num_return_sequences: int = 4
    temperature: float = 1.0
    min_score: float = 0.0
    max_length: int = 256

    def __post_init__(self) -> None:
        if not isinstance(self.num_return_sequences, int) or self.num_return_sequences < 1:
            raise InvalidParamError("num_return_sequences must be a positive integer")
        if not math.isfinite(self.temperature) or self.temperature <= 0:
            raise InvalidParamError("temperature must be positive and finite")
        if not 0.0 <= self.min_score <= 1.0:
            raise InvalidParamError("min_score must lie in [0, 1]")
        if not isinstance(self.max_length, int) or self.max_length < 1:
            raise InvalidParamError("max_length must be a positive integer")


_PARAM_FIELDS = frozenset(f.name for f in fields(GeneratorParams))


def merge_params(base: GeneratorParams, overrides: Mapping[str, object]) -> GeneratorParams:
    """base with the given fields replaced; unknown names are rejected."""
    unknown = set(overrides) - _PARAM_FIELDS
    if unknown:
        raise InvalidParamError(f"unknown parameter {sorted(unknown)[0]!r}")
    return replace(base, **overrides)  # type: ignore[arg-type]


@dataclass(frozen=True, slots=True)
class ScoredText:
    text: str
    score: float


def sort_scored(items) -> list[ScoredText]:
    return sorted(items, key=lambda st: (-st.score, st.text))


class GeneratorKind(Enum):
    BUILTIN = "builtin"
    SCRIPTED = "scripted"
    EXTERNAL = "external"


@dataclass(frozen=True, slots=True)
class GeneratorSpec:
    kind: GeneratorKind
    params: GeneratorParams = field(default_factory=GeneratorParams)
    path: str | None = None
    name: str | None = None
    host: str | None = None
    port: int | None = None

    def __post_init__(self) -> None:
        if self.kind is GeneratorKind.SCRIPTED and not self.path:
            raise InvalidParamError("scripted generator needs a fixture path")
        if self.kind is GeneratorKind.EXTERNAL and not (
            self.name and self.host and self.port
        ):
            raise InvalidParamError("external generator needs name, host and port")

    @classmethod
    def builtin(cls, params: GeneratorParams | None = None) -> "GeneratorSpec":
        return cls(GeneratorKind.BUILTIN, params or GeneratorParams())

    @classmethod
    def scripted(cls, path: str, params: GeneratorParams | None = None) -> "GeneratorSpec":
        return cls(GeneratorKind.SCRIPTED, params or GeneratorParams(), path=path)

    @classmethod
    def external(
        cls, name: str, host: str, port: int, params: GeneratorParams | None = None
    ) -> "GeneratorSpec":
        return cls(
            GeneratorKind.EXTERNAL, params or GeneratorParams(), name=name, host=host, port=port
        )


class EncoderKind(Enum):
    HASH_TRIGRAM = "hash-trigram"
    EXTERNAL = "external"


@dataclass(frozen=True, slots=True)
class EncoderSpec:
    kind: EncoderKind
    dim: int = 256
    name: str | None = None
    host: str | None = None
    port: int | None = None

    def __post_init__(self) -> None:
        if self.dim < 16:
            raise InvalidParamError("encoder dimension must be at least 16")
        if self.kind is EncoderKind.EXTERNAL and not (self.name and self.host and self.port):
            raise InvalidParamError("external encoder needs name, host and port")

    @classmethod
    def hash_trigram(cls, dim: int = 256) -> "EncoderSpec":
        return cls(EncoderKind.HASH_TRIGRAM, dim)

    @classmethod
    def external(cls, name: str, host: str, port: int, dim: int = 256) -> "EncoderSpec":
        return cls(EncoderKind.EXTERNAL, dim, name=name, host=host, port=port)


# ---------------------------------------------------------------------------
# Builtin generator

# Fixed score table. Keys are tactic families, not texts: each concrete
# candidate an expansion proposes inherits its family's score.
BUILTIN_SCORES = {
    TacticKind.TRIVIAL: 0.99,
    TacticKind.EXACT: 0.95,
    TacticKind.ASSUMPTION: 0.90,
    TacticKind.INTRO: 0.85,
    TacticKind.SPLIT: 0.85,
    TacticKind.APPLY: 0.80,
    TacticKind.CONTRADICTION: 0.70,
    TacticKind.CASES: 0.65,
    TacticKind.LEFT: 0.60,
    TacticKind.RIGHT: 0.55,
    TacticKind.EXFALSO: 0.10,
}


def _apply_matches(f: Formula, target: Formula) -> bool:
    cur = f
    while True:
        if cur == target:
            return True
        if isinstance(cur, Imp):
            cur = cur.rhs
        else:
            return False


def builtin_candidates(
    goal: Sequent,
    lemmas: Mapping[str, Formula] = {},
    scope: Sequence[str] | None = None,
) -> list[tuple[Tactic, float]]:
    """Raw (tactic, score) proposals for one goal, before any filtering.

    Deterministic: hypotheses in context order, lemmas in table order.
    Every proposal is accepted by apply_tactic on this goal by construction,
    except that no proposal is checked here; the suggest layer does that.
    """
    target = goal.target
    out: list[tuple[Tactic, float]] = []
    score = BUILTIN_SCORES
    if target == TRUTH:
        out.append((Tactic(TacticKind.TRIVIAL), score[TacticKind.TRIVIAL]))
    matched = False
    for h in goal.hypotheses:
        if h.formula == target:
            out.append((Tactic(TacticKind.EXACT, h.name), score[TacticKind.EXACT]))
            matched = True
    if matched:
        out.append((Tactic(TacticKind.ASSUMPTION), score[TacticKind.ASSUMPTION]))
    if isinstance(target, Imp):
        out.append((Tactic(TacticKind.INTRO, fresh_name(goal)), score[TacticKind.INTRO]))
    if isinstance(target, And):
        out.append((Tactic(TacticKind.SPLIT), score[TacticKind.SPLIT]))
    for h in goal.hypotheses:
        if _apply_matches(h.formula, target):
            out.append((Tactic(TacticKind.APPLY, h.name), score[TacticKind.APPLY]))
    if scope is None:
        scope = tuple(lemmas.keys())
    hyp_names = {h.name for h in goal.hypotheses}
    for name in scope:
        f = lemmas.get(name)
        if f is None or name in hyp_names:
            continue
        if _apply_matches(f, target):
            out.append((Tactic(TacticKind.APPLY, name), score[TacticKind.APPLY]))
    if _has_contradiction(goal):
        out.append((Tactic(TacticKind.CONTRADICTION), score[TacticKind.CONTRADICTION]))
    for h in goal.hypotheses:
        if isinstance(h.formula, (And, Or, Falsity)):
            out.append((Tactic(TacticKind.CASES, h.name), score[TacticKind.CASES]))
    if isinstance(target, Or):
        out.append((Tactic(TacticKind.LEFT), score[TacticKind.LEFT]))
        out.append((Tactic(TacticKind.RIGHT), score[TacticKind.RIGHT]))
    out.append((Tactic(TacticKind.EXFALSO), score[TacticKind.EXFALSO]))
    return out


def rescale_temperature(scores: Sequence[float], temperature: float) -> list[float]:
    """s -> s**(1/t), renormalized so the maximum score is unchanged.

    Monotone in s for every positive t, so candidate order is preserved;
    t > 1 compresses scores toward the maximum, t < 1 spreads them out.
    """
    if not scores:
        return []
    if temperature == 1.0:
        return list(scores)
    top = max(scores)
    inv = 1.0 / temperature
    factor = top ** (1.0 - inv)
    return [min(1.0, (s**inv) * factor) for s in scores]


def _finish(
    raw: list[ScoredText], params: GeneratorParams, prefix: str = ""
) -> list[ScoredText]:
    """Shared tail of every generator: filter, dedupe, sort, truncate."""
    kept = [
        st
        for st in raw
        if st.score >= params.min_score
        and len(st.text) <= params.max_length
        and (not prefix or st.text.startswith(prefix))
    ]
    seen: set[str] = set()
    out: list[ScoredText] = []
    for st in sort_scored(kept):
        key = " ".join(st.text.split())
        if key in seen:
            continue
        seen.add(key)
        out.append(st)
        if len(out) == params.num_return_sequences:
            break
    return out


def builtin_suggest(
    goal: Sequent,
    lemmas: Mapping[str, Formula],
    params: GeneratorParams,
    scope: Sequence[str] | None = None,
) -> list[ScoredText]:
    """Builtin proposals for a goal with full kernel context."""
    cands = builtin_candidates(goal, lemmas, scope)
    rescaled = rescale_temperature([s for _, s in cands], params.temperature)
    raw = [ScoredText(render_tactic(t), s) for (t, _), s in zip(cands, rescaled)]
    return _finish(raw, params)


# ---------------------------------------------------------------------------
# Scripted fixtures


def load_fixture(path: str) -> dict[str, list[ScoredText]]:
    """Parse a TSV fixture: goal text, tactic text, score in (0, 1]."""
    table: dict[str, list[ScoredText]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, got {len(parts)}", lineno, 1
            )
        goal_text, tactic_text, score_text = parts
        try:
            score = float(score_text)
        except ValueError:
            raise ParseError(f"bad score {score_text!r}", lineno, 1) from None
        if not math.isfinite(score) or not 0.0 < score <= 1.0:
            raise ParseError(f"score {score!r} outside (0, 1]", lineno, 1)
        table.setdefault(goal_text, []).append(ScoredText(tactic_text, score))
    return table


# ---------------------------------------------------------------------------
# Entry points


def generate(spec: GeneratorSpec, input_text: str, prefix: str = "") -> list[ScoredText]:
    """Generate candidates for a goal text.

    The builtin route parses the goal text back into a sequent and works
    without a lemma table (the text does not carry one); an unparseable
    input yields no candidates rather than an error, since arbitrary text
    is a legal query. Scripted and external routes are plain lookups.
    """
    if not input_text:
        raise EmptyInputError("generator input must be non-empty")
    params = spec.params
    if spec.kind is GeneratorKind.BUILTIN:
        try:
            goal = parse_goal(input_text)
        except ParseError:
            return []
        cands = builtin_candidates(goal, {}, ())
        rescaled = rescale_temperature([s for _, s in cands], params.temperature)
        raw = [ScoredText(render_tactic(t), s) for (t, _), s in zip(cands, rescaled)]
    elif spec.kind is GeneratorKind.SCRIPTED:
        assert spec.path is not None
        raw = list(load_fixture(spec.path).get(input_text, []))
    else:
        from . import client

        assert spec.name and spec.host and spec.port
        raw = client.external_generate(
            spec.name, spec.host, spec.port, input_text, prefix, params
        )
    return _finish(raw, params, prefix)


def hash_encode(text: str, dim: int = 256) -> np.ndarray:
    """L2-normalized float32 histogram of FNV-1a byte-trigram hashes.

    Bit-reproducible: the histogram is exact integer arithmetic and the
    normalization is one float64 divide rounded to float32. Inputs shorter
    than three bytes have no trigrams and encode to the zero vector.
    """
    if not text:
        raise EmptyInputError("encoder input must be non-empty")
    hist = backends.trigram_histogram(text.encode("utf-8"), dim)
    dense = hist.astype(np.float64)
    norm = math.sqrt(float(np.dot(dense, dense)))
    if norm == 0.0:
        return np.zeros(dim, dtype=np.float32)
    return (dense / norm).astype(np.float32)


def encode(spec: EncoderSpec, input_text: str) -> np.ndarray:
    """Encode text to a float32 vector of spec.dim entries."""
    if not input_text:
        raise EmptyInputError("encoder input must be non-empty")
    if spec.kind is EncoderKind.HASH_TRIGRAM:
        return hash_encode(input_text, spec.dim)
    from . import client

    assert spec.name and spec.host and spec.port
    return client.external_encode(spec.name, spec.host, spec.port, input_text)
