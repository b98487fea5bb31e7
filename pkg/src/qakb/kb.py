"""QA-pair knowledge bases: data model, JSONL persistence, filtering, dedup.

A knowledge base is an immutable ordered list of :class:`QAPair` records.
Serialization is canonical (fixed key order, compact separators, LF endings)
so that save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ValidationError
from .textnorm import normalize_answer

SOURCES = ("generated-learnt", "generated-ner", "training-set", "other")

_QA_KEYS = ("id", "question", "answer", "score", "passage_id", "source")
_PASSAGE_KEYS = ("passage_id", "title", "text", "ps_score")


@dataclass(frozen=True, slots=True)
class QAPair:
    """One question/answer record with a likelihood-of-being-asked score."""

    id: int
    question: str
    answer: str
    score: float
    passage_id: int | None = None
    source: str = "other"

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValidationError(f"QAPair {self.id}: question is empty")
        if not self.answer.strip():
            raise ValidationError(f"QAPair {self.id}: answer is empty")
        if self.source not in SOURCES:
            raise ValidationError(
                f"QAPair {self.id}: unknown source {self.source!r} (expected one of {SOURCES})"
            )
        if not math.isfinite(self.score):
            raise ValidationError(f"QAPair {self.id}: score must be finite")


@dataclass(frozen=True, slots=True)
class PassageRecord:
    """A corpus passage (roughly 100-word chunk) with its selection score."""

    passage_id: int
    title: str
    text: str
    ps_score: float = 0.0

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError(f"passage {self.passage_id}: text is empty")
        if not math.isfinite(self.ps_score):
            raise ValidationError(f"passage {self.passage_id}: ps_score must be finite")


class KnowledgeBase:
    """Immutable ordered collection of QA-pairs with unique ids.

    Safe for concurrent reads; construction validates id uniqueness.
    """

    def __init__(self, pairs: Iterable[QAPair], metadata: dict | None = None):
        self.pairs: tuple[QAPair, ...] = tuple(pairs)
        self.metadata: dict = dict(metadata or {})
        by_id: dict[int, QAPair] = {}
        for p in self.pairs:
            if p.id in by_id:
                raise ValidationError(f"duplicate QAPair id {p.id}")
            by_id[p.id] = p
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[QAPair]:
        return iter(self.pairs)

    def __getitem__(self, i: int) -> QAPair:
        return self.pairs[i]

    def get(self, pair_id: int) -> QAPair | None:
        return self._by_id.get(pair_id)

    def questions(self) -> list[str]:
        return [p.question for p in self.pairs]


def _pair_to_json(pair: QAPair) -> str:
    obj = {
        "id": pair.id,
        "question": pair.question,
        "answer": pair.answer,
        "score": pair.score,
        "passage_id": pair.passage_id,
        "source": pair.source,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _pair_from_obj(obj: dict, lineno: int) -> QAPair:
    missing = [k for k in _QA_KEYS if k not in obj]
    if missing:
        raise ValidationError(f"line {lineno}: missing fields {missing}")
    try:
        return QAPair(
            id=int(obj["id"]),
            question=str(obj["question"]),
            answer=str(obj["answer"]),
            score=float(obj["score"]),
            passage_id=None if obj["passage_id"] is None else int(obj["passage_id"]),
            source=str(obj["source"]),
        )
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"line {lineno}: bad field value ({exc})") from exc


def load_kb(path: str | Path, metadata: dict | None = None) -> KnowledgeBase:
    """Load a JSONL QA-pair file, validating every record.

    Raises :class:`ValidationError` naming the offending line on malformed
    records and naming the id on duplicates.
    """
    path = Path(path)
    pairs: list[QAPair] = []
    seen: set[int] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"{path}: line {lineno}: expected a JSON object")
            pair = _pair_from_obj(obj, lineno)
            if pair.id in seen:
                raise ValidationError(f"{path}: line {lineno}: duplicate id {pair.id}")
            seen.add(pair.id)
            pairs.append(pair)
    meta = dict(metadata or {})
    meta.setdefault("name", path.name)
    return KnowledgeBase(pairs, meta)


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    """Write the canonical JSONL form (UTF-8, LF, one record per line)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for pair in kb.pairs:
            fh.write(_pair_to_json(pair))
            fh.write("\n")


def load_passages(path: str | Path) -> list[PassageRecord]:
    """Load a JSONL passage file."""
    path = Path(path)
    records: list[PassageRecord] = []
    seen: set[int] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            missing = [k for k in _PASSAGE_KEYS if k not in obj]
            if missing:
                raise ValidationError(f"{path}: line {lineno}: missing fields {missing}")
            rec = PassageRecord(
                passage_id=int(obj["passage_id"]),
                title=str(obj["title"]),
                text=str(obj["text"]),
                ps_score=float(obj["ps_score"]),
            )
            if rec.passage_id in seen:
                raise ValidationError(f"{path}: line {lineno}: duplicate passage_id {rec.passage_id}")
            seen.add(rec.passage_id)
            records.append(rec)
    return records


def save_passages(records: Iterable[PassageRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {
                "passage_id": rec.passage_id,
                "title": rec.title,
                "text": rec.text,
                "ps_score": rec.ps_score,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def filter_by_score(
    kb: KnowledgeBase,
    keep: int | None = None,
    min_score: float | None = None,
) -> KnowledgeBase:
    """Keep the highest-scoring pairs (count form) or all above a threshold.

    Survivors retain their original relative order; ties at the cut are
    broken by ascending id.
    """
    if (keep is None) == (min_score is None):
        raise ValidationError("filter_by_score takes exactly one of keep= or min_score=")
    if keep is not None:
        if keep < 0 or keep > len(kb):
            raise ValidationError(f"keep={keep} out of range for KB of size {len(kb)}")
        order = sorted(range(len(kb)), key=lambda i: (-kb.pairs[i].score, kb.pairs[i].id))
        chosen = sorted(order[:keep])
        survivors = [kb.pairs[i] for i in chosen]
    else:
        survivors = [p for p in kb.pairs if p.score >= min_score]
    return KnowledgeBase(survivors, kb.metadata)


def dedup_questions(pairs: Iterable[QAPair]) -> list[QAPair]:
    """Keep the first pair (in input order) for each normalized question."""
    seen: set[str] = set()
    out: list[QAPair] = []
    for p in pairs:
        key = normalize_answer(p.question)
        if key in seen:
            continue
        seen.add(key)
        out.append(p)
    return out


def concat_kbs(kbs: list[KnowledgeBase]) -> tuple[KnowledgeBase, list[dict]]:
    """Concatenate KBs, re-mapping ids to a fresh 0..n-1 sequence.

    Returns the merged KB and an id-map: one entry per pair recording the
    source KB index, the original id, and the new id.
    """
    merged: list[QAPair] = []
    id_map: list[dict] = []
    next_id = 0
    for kb_idx, kb in enumerate(kbs):
        for pair in kb.pairs:
            id_map.append({"kb": kb_idx, "source_id": pair.id, "id": next_id})
            merged.append(replace(pair, id=next_id))
            next_id += 1
    name = "+".join(kb.metadata.get("name", f"kb{j}") for j, kb in enumerate(kbs))
    return KnowledgeBase(merged, {"name": name}), id_map
