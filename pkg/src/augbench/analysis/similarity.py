"""Centroid cosine similarity between an original sample set and an augmented one."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..corpus import Source


class SimilarityError(ValueError):
    pass


def centroid(matrix) -> np.ndarray:
    M = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if M.shape[0] == 0 or M.size == 0:
        raise SimilarityError("centroid of an empty matrix")
    if not np.all(np.isfinite(M)):
        raise SimilarityError("embedding matrix has non-finite entries")
    return M.mean(axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise SimilarityError("cosine is undefined for a zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _embed(embedder, docs) -> np.ndarray:
    if hasattr(embedder, "embed_documents"):
        return np.asarray(embedder.embed_documents(docs), dtype=np.float64)
    return np.vstack(embedder.embed([d.raw_text for d in docs]))


def semantic_similarity(original_positive: Sequence, augmented, embedder) -> float:
    """Cosine between the centroid of the originals and that of the augmented set.

    ``augmented`` is an ``AugmentationBatch`` or a plain document list.
    """
    aug_docs = list(getattr(augmented, "samples", augmented))
    original_positive = list(original_positive)
    if not original_positive or not aug_docs:
        raise SimilarityError("both document sets must be nonempty")
    return cosine(centroid(_embed(embedder, original_positive)), centroid(_embed(embedder, aug_docs)))


@dataclass(frozen=True)
class SimilarityRow:
    method: str
    similarity: float

    @classmethod
    def for_source(cls, source: Source, similarity: float) -> "SimilarityRow":
        return cls(source.display, similarity)


def render_similarity_table(rows: Sequence[SimilarityRow]) -> str:
    lines = ["| Augmentation Method | Similarity to Original |", "|---|---|"]
    lines += [f"| {r.method} | {r.similarity:.4f} |" for r in rows]
    return "\n".join(lines) + "\n"
