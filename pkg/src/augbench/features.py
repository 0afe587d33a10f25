"""Whitespace tokenization and smoothed TF-IDF with L2-normalized sparse output."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class EmptyVocabularyError(ValueError):
    pass


def tokenize(norm_text: str) -> list[str]:
    return norm_text.split()


@dataclass(frozen=True)
class SparseVector:
    """Entries sorted ascending by index; ``dimension`` is the vocabulary size."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @classmethod
    def from_dense(cls, dense: Sequence[float]) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        idx = np.flatnonzero(dense)
        return cls(idx, dense[idx], dense.shape[0])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def stack(vectors: Sequence[SparseVector], dimension: int | None = None) -> sp.csr_matrix:
    """Row-stack sparse vectors into a CSR matrix."""
    if dimension is None:
        if not vectors:
            raise ValueError("cannot infer dimension of an empty stack")
        dimension = vectors[0].dimension
    indptr = [0]
    for v in vectors:
        if v.dimension != dimension:
            raise ValueError(f"dimension mismatch: {v.dimension} != {dimension}")
        indptr.append(indptr[-1] + v.nnz)
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, np.asarray(indptr)), shape=(len(vectors), dimension))


@dataclass(frozen=True)
class TfidfConfig:
    min_df: int = 1
    l2_normalize: bool = True


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    document_frequency: dict[str, int]
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Vocabulary
    idf: np.ndarray
    config: TfidfConfig = field(default_factory=TfidfConfig)

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def transform(self, doc: Sequence[str]) -> SparseVector:
        counts = Counter(t for t in doc if t in self.vocabulary.index)
        if not counts:
            return SparseVector(np.zeros(0, np.int64), np.zeros(0), self.dimension)
        pairs = sorted((self.vocabulary.index[t], c) for t, c in counts.items())
        idx = np.array([i for i, _ in pairs], dtype=np.int64)
        weights = np.array([c for _, c in pairs], dtype=np.float64) * self.idf[idx]
        if self.config.l2_normalize:
            norm = math.sqrt(float(np.dot(weights, weights)))
            if norm > 0:
                weights = weights / norm
        return SparseVector(idx, weights, self.dimension)

    def transform_many(self, docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
        return stack([self.transform(d) for d in docs], self.dimension)

    def to_json(self) -> dict:
        tokens = sorted(self.vocabulary.index, key=self.vocabulary.index.get)
        return {
            "vocabulary": tokens,
            "document_frequency": [self.vocabulary.document_frequency[t] for t in tokens],
            "n_docs": self.vocabulary.n_docs,
            "idf": [float(x) for x in self.idf],
            "config": {"min_df": self.config.min_df, "l2_normalize": self.config.l2_normalize},
        }

    @classmethod
    def from_json(cls, data: dict) -> "TfidfModel":
        tokens = data["vocabulary"]
        vocab = Vocabulary(
            {t: i for i, t in enumerate(tokens)},
            dict(zip(tokens, data["document_frequency"])),
            data["n_docs"],
        )
        return cls(vocab, np.asarray(data["idf"], dtype=np.float64), TfidfConfig(**data["config"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")


def fit(docs: Sequence[Sequence[str]], config: TfidfConfig | None = None) -> TfidfModel:
    """Fit vocabulary (first-occurrence order) and idf = ln((1+N)/(1+df)) + 1."""
    config = config or TfidfConfig()
    if not docs:
        raise ValueError("cannot fit TF-IDF on zero documents")
    df: Counter = Counter()
    order: dict[str, None] = {}
    for doc in docs:
        for t in doc:
            order.setdefault(t, None)
        df.update(set(doc))
    kept = [t for t in order if df[t] >= config.min_df]
    if not kept:
        raise EmptyVocabularyError("no token reaches min_df; vocabulary is empty")
    n = len(docs)
    index = {t: i for i, t in enumerate(kept)}
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in kept])
    return TfidfModel(Vocabulary(index, {t: df[t] for t in kept}, n), idf, config)
