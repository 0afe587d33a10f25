"""Labeled corpus ingestion, text normalization, class rebalancing."""

from __future__ import annotations

import csv
import json
import logging
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Malformed corpus input or an impossible corpus operation."""


class Label(Enum):
    NEGATIVE = 0  # non-gender-based hate speech
    POSITIVE = 1  # gender-based hate speech

    @classmethod
    def parse(cls, value) -> "Label":
        key = str(value).strip().lower()
        if key in ("1", "gender_hs", "positive"):
            return cls.POSITIVE
        if key in ("0", "non_gender_hs", "negative"):
            return cls.NEGATIVE
        raise CorpusError(f"unparseable label {value!r}")

    def __str__(self) -> str:
        return str(self.value)


class Source(Enum):
    ORIGINAL = "original"
    BACKTRANSLATION = "backtranslation"
    SINGLE_CLASS_GEN = "single_class_gen"
    DUAL_CLASS_GEN = "dual_class_gen"

    @property
    def display(self) -> str:
        return _SOURCE_DISPLAY[self]


_SOURCE_DISPLAY = {
    Source.ORIGINAL: "Original",
    Source.BACKTRANSLATION: "Backtranslation",
    Source.SINGLE_CLASS_GEN: "Single-class prompt generation",
    Source.DUAL_CLASS_GEN: "Dual-class prompt generation",
}


@dataclass(frozen=True)
class Document:
    id: str
    raw_text: str
    label: Label
    source: Source = Source.ORIGINAL
    norm_text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be nonempty")
        if not self.raw_text.strip():
            raise CorpusError(f"document {self.id!r} has empty text")

    def normalized(self) -> str:
        return self.norm_text if self.norm_text is not None else normalize(self.raw_text)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "text": self.raw_text,
            "label": self.label.value,
            "source": self.source.value,
        }


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    name: str = "corpus"
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        docs = tuple(self.documents)
        object.__setattr__(self, "documents", docs)
        index = {}
        for i, doc in enumerate(docs):
            if doc.id in index:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            index[doc.id] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __contains__(self, doc_id) -> bool:
        return doc_id in self._index

    def get(self, doc_id: str) -> Document:
        return self.documents[self._index[doc_id]]

    def with_label(self, label: Label) -> list[Document]:
        return [d for d in self.documents if d.label is label]

    def extend(self, docs: Iterable[Document], name: str | None = None) -> "Corpus":
        return Corpus(self.documents + tuple(docs), name or self.name)

    def normalized(self) -> "Corpus":
        """Copy with ``norm_text`` filled in for every document."""
        return Corpus(
            tuple(replace(d, norm_text=d.normalized()) for d in self.documents), self.name
        )


_HANDLE = re.compile(r"@\w+")
_DIGITS = re.compile(r"\d+")
_PLACEHOLDER = re.compile(r"\[NUM\]|\[USERNAME\]")
_SPACE = re.compile(r"\s+")
# Private-use sentinels carry placeholders through lowercasing and filtering.
_SENTINEL = {"[USERNAME]": "\ue000", "[NUM]": "\ue001"}
_UNSENTINEL = {v: k for k, v in _SENTINEL.items()}


def _keep(ch: str) -> bool:
    return ch.isalpha() or ch.isspace() or ch in _UNSENTINEL


def normalize(raw_text: str) -> str:
    """Replace handles and digit runs with placeholders, lowercase, strip symbols.

    Existing ``[NUM]``/``[USERNAME]`` placeholders are preserved, which makes the
    function idempotent.
    """
    text = raw_text.replace("\ue000", "").replace("\ue001", "")
    text = _PLACEHOLDER.sub(lambda m: _SENTINEL[m.group(0)], text)
    text = _HANDLE.sub(_SENTINEL["[USERNAME]"], text)
    text = _DIGITS.sub(_SENTINEL["[NUM]"], text)
    text = text.lower()
    text = "".join(ch for ch in text if _keep(ch))
    text = _SPACE.sub(" ", text).strip()
    for sentinel, placeholder in _UNSENTINEL.items():
        text = text.replace(sentinel, placeholder)
    return text


def _rows_csv(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"text", "label"} <= set(reader.fieldnames):
            raise CorpusError(f"{path}: CSV header must contain text and label columns")
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise CorpusError(f"{path}:{line}: malformed row (wrong column count)")
            yield line, row


def _rows_jsonl(path: Path):
    with path.open(encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line}: malformed JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise CorpusError(f"{path}:{line}: malformed row (expected an object)")
            yield line, row


def ingest(path, format: str | None = None, name: str | None = None) -> Corpus:
    """Read a CSV or JSONL corpus; every document is tagged ``Source.ORIGINAL``.

    Rows without an ``id`` get ``doc-<row number>``. Errors name the line.
    """
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".json") else "csv")
    if fmt not in ("csv", "jsonl"):
        raise CorpusError(f"unknown corpus format {fmt!r}")
    rows = _rows_csv(path) if fmt == "csv" else _rows_jsonl(path)
    docs = []
    seen: dict[str, int] = {}
    for n, (line, row) in enumerate(rows):
        if "text" not in row or "label" not in row:
            raise CorpusError(f"{path}:{line}: missing text or label")
        try:
            label = Label.parse(row["label"])
        except CorpusError as exc:
            raise CorpusError(f"{path}:{line}: {exc}") from None
        explicit = row.get("id")
        doc_id = str(explicit).strip() if explicit not in (None, "") else f"doc-{n + 1}"
        if doc_id in seen:
            raise CorpusError(
                f"{path}:{line}: duplicate id {doc_id!r} (first seen on line {seen[doc_id]})"
            )
        seen[doc_id] = line
        text = str(row["text"])
        if not text.strip():
            raise CorpusError(f"{path}:{line}: empty text")
        docs.append(Document(doc_id, text, label, Source.ORIGINAL))
    return Corpus(tuple(docs), name or path.stem)


def write_corpus(corpus: Corpus, path, format: str | None = None) -> Path:
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".json") else "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "text", "label"])
            for d in corpus:
                writer.writerow([d.id, d.raw_text, d.label.value])
    else:
        with path.open("w", encoding="utf-8") as fh:
            for d in corpus:
                fh.write(json.dumps(d.to_record(), ensure_ascii=False) + "\n")
    return path


def balance(corpus: Corpus, negative_per_positive: float = 2.0, seed: int = 0) -> Corpus:
    """Keep every Positive document plus a seeded sample of Negatives.

    The Negative sample has ``floor(ratio * n_positive)`` documents and keeps
    corpus order.
    """
    if negative_per_positive < 1:
        raise CorpusError("negative_per_positive must be >= 1")
    positives = corpus.with_label(Label.POSITIVE)
    if not positives:
        raise CorpusError("corpus has no Positive documents")
    negatives = corpus.with_label(Label.NEGATIVE)
    want = int(negative_per_positive * len(positives))
    if want > len(negatives):
        raise CorpusError(
            f"requested {want} Negative documents but only {len(negatives)} available"
        )
    chosen = {d.id for d in random.Random(seed).sample(negatives, want)}
    kept = tuple(
        d for d in corpus if d.label is Label.POSITIVE or d.id in chosen
    )
    return Corpus(kept, corpus.name)


def composition(corpus: Corpus) -> dict[tuple[Source, Label], int]:
    counts = Counter((d.source, d.label) for d in corpus)
    return {(s, lab): counts.get((s, lab), 0) for s in Source for lab in Label}
