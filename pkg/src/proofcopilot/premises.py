"""Premise records, embedding indexes, and retrieval.

A premise index pairs one row of a float32 embedding matrix with one
lemma record. Retrieval scores every row against an encoded query with a
dot product (the backend kernel accumulates in float64 and rounds once)
and returns the top k, breaking score ties toward the lower row index so
results never depend on sort internals. Selected premises are annotated
for display: an in-scope lemma shows its signature and docstring, an
out-of-scope one shows which module to import and its definition source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from . import backends, npyio
from .errors import (
    DimensionMismatchError,
    DuplicateNameError,
    FormatError,
    ParseError,
    ShapeError,
)
from .formula import Formula, parse_formula, pretty
from .generation import EncoderSpec, encode
from .kernel import Sequent, pretty_goal

MATRIX_FILENAME = "premises.npy"
RECORDS_FILENAME = "premises.jsonl"
DEFAULT_K = 4


@dataclass(frozen=True, slots=True)
class PremiseRecord:
    """One library lemma as seen by retrieval."""

    name: str
    module: str
    statement: Formula
    docstring: str | None
    definition_source: str

    def signature(self) -> str:
        return f"{self.name} : {pretty(self.statement)}"


@dataclass(frozen=True, slots=True)
class InScope:
    """Annotation for a premise usable without any import."""

    signature: str
    docstring: str | None


@dataclass(frozen=True, slots=True)
class OutOfScope:
    """Annotation for a premise that needs an import first."""

    required_import: str
    definition_source: str


Annotation = Union[InScope, OutOfScope]


@dataclass(frozen=True, slots=True)
class RankedPremise:
    record: PremiseRecord
    score: float
    in_scope: bool
    annotation: Annotation


@dataclass(frozen=True)
class PremiseIndex:
    """Records plus their embedding matrix, row i belonging to records[i]."""

    records: tuple[PremiseRecord, ...]
    matrix: np.ndarray
    encoder: EncoderSpec

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ShapeError(f"embedding matrix must be 2-D, got {self.matrix.ndim}-D")
        if self.matrix.shape[0] != len(self.records):
            raise ShapeError(
                f"{len(self.records)} records but {self.matrix.shape[0]} matrix rows"
            )
        if self.matrix.shape[1] != self.encoder.dim:
            raise DimensionMismatchError(
                f"matrix is {self.matrix.shape[1]}-dimensional, "
                f"encoder expects {self.encoder.dim}"
            )


def build_index(records: Iterable[PremiseRecord], encoder: EncoderSpec) -> PremiseIndex:
    """Encode every record's signature into one matrix row."""
    recs = tuple(records)
    seen: set[str] = set()
    for rec in recs:
        if rec.name in seen:
            raise DuplicateNameError(f"duplicate premise name {rec.name!r}")
        seen.add(rec.name)
    if recs:
        matrix = np.stack([encode(encoder, rec.signature()) for rec in recs])
    else:
        matrix = np.zeros((0, encoder.dim), dtype=np.float32)
    return PremiseIndex(recs, matrix, encoder)


def top_k(matrix: np.ndarray, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Indices and scores of the k best rows, ties toward the lower index."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if matrix.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got {matrix.ndim}-D")
    if query.ndim != 1:
        raise ShapeError(f"query must be 1-D, got {query.ndim}-D")
    if matrix.shape[1] != query.shape[0]:
        raise DimensionMismatchError(
            f"matrix rows are {matrix.shape[1]}-dimensional, query is {query.shape[0]}"
        )
    scores = backends.score_rows(
        np.ascontiguousarray(matrix, dtype=np.float32),
        np.ascontiguousarray(query, dtype=np.float32),
    )
    # stable sort on the negated scores keeps equal-scored rows in row order
    order = np.argsort(-scores, kind="stable")[:k]
    return [(int(i), float(scores[i])) for i in order]


def select_premises(
    index: PremiseIndex,
    goal: Sequent,
    imported_modules: Iterable[str],
    k: int = DEFAULT_K,
) -> list[RankedPremise]:
    """Rank the k most relevant premises for a goal and annotate each."""
    if len(index.records) == 0:
        return []
    query = encode(index.encoder, pretty_goal(goal))
    imported = frozenset(imported_modules)
    out: list[RankedPremise] = []
    for row, score in top_k(index.matrix, query, k):
        rec = index.records[row]
        in_scope = rec.module in imported
        annotation: Annotation
        if in_scope:
            annotation = InScope(rec.signature(), rec.docstring)
        else:
            annotation = OutOfScope(rec.module, rec.definition_source)
        out.append(RankedPremise(rec, score, in_scope, annotation))
    return out


def write_records(records: Iterable[PremiseRecord], path: str | Path) -> None:
    """Write records as JSON lines, statements in concrete syntax."""
    with open(path, "w", encoding="utf-8") as sink:
        for rec in records:
            sink.write(
                json.dumps(
                    {
                        "name": rec.name,
                        "module": rec.module,
                        "statement": pretty(rec.statement),
                        "docstring": rec.docstring,
                        "definitionSource": rec.definition_source,
                    },
                    ensure_ascii=False,
                )
            )
            sink.write("\n")


def read_records(path: str | Path) -> list[PremiseRecord]:
    records: list[PremiseRecord] = []
    with open(path, "r", encoding="utf-8") as source:
        for lineno, line in enumerate(source, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {e}") from None
            try:
                name = raw["name"]
                module = raw["module"]
                statement = parse_formula(raw["statement"])
                docstring = raw.get("docstring")
                definition_source = raw["definitionSource"]
            except KeyError as e:
                raise FormatError(f"{path}:{lineno}: missing field {e}") from None
            except ParseError as e:
                raise FormatError(f"{path}:{lineno}: bad statement: {e}") from None
            except TypeError:
                raise FormatError(f"{path}:{lineno}: statement must be a string") from None
            if not isinstance(name, str) or not isinstance(module, str):
                raise FormatError(f"{path}:{lineno}: name and module must be strings")
            if docstring is not None and not isinstance(docstring, str):
                raise FormatError(f"{path}:{lineno}: docstring must be a string or null")
            if not isinstance(definition_source, str):
                raise FormatError(f"{path}:{lineno}: definitionSource must be a string")
            records.append(
                PremiseRecord(name, module, statement, docstring, definition_source)
            )
    return records


def save_index(index: PremiseIndex, directory: str | Path) -> None:
    directory = Path(directory)
    npyio.save_npy(directory / MATRIX_FILENAME, index.matrix)
    write_records(index.records, directory / RECORDS_FILENAME)


def load_index(directory: str | Path, encoder: EncoderSpec) -> PremiseIndex:
    directory = Path(directory)
    matrix = npyio.load_npy(directory / MATRIX_FILENAME)
    records = read_records(directory / RECORDS_FILENAME)
    return PremiseIndex(tuple(records), matrix, encoder)
