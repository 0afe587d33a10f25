"""Minority-class sample synthesis: dual-class prompting, single-class prompting,
backtranslation, and the validation/dedup filter applied to every candidate."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, Document, Label, Source, normalize
from .providers import GenerationParams, canonical_bytes, clean_completion

logger = logging.getLogger(__name__)

NEGATIVE_CATEGORY = "non-hate speech towards gender"
POSITIVE_CATEGORY = "hate speech towards gender"
INSTRUCTION = (
    f"Please generate a new tweet that belongs to the category of '{POSITIVE_CATEGORY}'. "
    "Important requirement: Generate the tweet in Indonesian language.\n"
    "Generated tweet:"
)
EXAMPLES_PER_CLASS = 5


class AugmentationError(RuntimeError):
    def __init__(self, message: str, batch: "AugmentationBatch | None" = None):
        super().__init__(message)
        self.batch = batch


def _block(category: str, examples: Sequence[str]) -> str:
    lines = [f"The following tweets belong to the category of '{category}':", ""]
    lines += [f"{i}. {ex}" for i, ex in enumerate(examples, start=1)]
    return "\n".join(lines)


def _check_examples(examples: Sequence[str], what: str) -> None:
    for ex in examples:
        if not isinstance(ex, str) or not ex.strip():
            raise ValueError(f"{what} examples must be nonempty strings")


def build_dual_class_prompt(negative_examples: Sequence[str], positive_examples: Sequence[str]) -> str:
    if len(negative_examples) != EXAMPLES_PER_CLASS or len(positive_examples) != EXAMPLES_PER_CLASS:
        raise ValueError(
            f"dual-class prompt needs exactly {EXAMPLES_PER_CLASS} examples per class, got "
            f"{len(negative_examples)} negative / {len(positive_examples)} positive"
        )
    _check_examples(negative_examples, "negative")
    _check_examples(positive_examples, "positive")
    return "\n\n".join([
        _block(NEGATIVE_CATEGORY, negative_examples),
        _block(POSITIVE_CATEGORY, positive_examples),
        INSTRUCTION,
    ])


def build_single_class_prompt(positive_examples: Sequence[str]) -> str:
    if len(positive_examples) == 0:
        raise ValueError("single-class prompt needs at least one example")
    _check_examples(positive_examples, "positive")
    return "\n\n".join([_block(POSITIVE_CATEGORY, positive_examples), INSTRUCTION])


# ------------------------------------------------------------- validation

@dataclass(frozen=True)
class ValidationConfig:
    min_tokens: int = 3
    max_tokens: int = 100
    max_jaccard: float = 0.9


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = Verdict(True)


def trigrams(tokens: Sequence[str]) -> frozenset:
    return frozenset(zip(tokens, tokens[1:], tokens[2:]))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


class Validator:
    """Incremental filter: corpus texts are indexed once, accepted texts accumulate."""

    def __init__(self, corpus: Corpus | Sequence[Document], config: ValidationConfig | None = None):
        self.config = config or ValidationConfig()
        self.corpus_texts = {d.normalized() for d in corpus}
        self.accepted_texts: set[str] = set()
        self.accepted_grams: list[frozenset] = []

    def check(self, candidate: str) -> Verdict:
        norm = normalize(candidate)
        tokens = norm.split()
        if not tokens:
            return Verdict(False, "empty")
        if len(tokens) < self.config.min_tokens:
            return Verdict(False, "too-short")
        if len(tokens) > self.config.max_tokens:
            return Verdict(False, "too-long")
        if norm in self.corpus_texts or norm in self.accepted_texts:
            return Verdict(False, "exact-duplicate")
        grams = trigrams(tokens)
        for other in self.accepted_grams:
            if jaccard(grams, other) > self.config.max_jaccard:
                return Verdict(False, "near-duplicate")
        return ACCEPT

    def accept(self, candidate: str) -> None:
        norm = normalize(candidate)
        self.accepted_texts.add(norm)
        self.accepted_grams.append(trigrams(norm.split()))


def validate_generated(candidate: str, corpus: Corpus | Sequence[Document],
                       accepted_so_far: Sequence[str] = (),
                       config: ValidationConfig | None = None) -> Verdict:
    validator = Validator(corpus, config)
    for text in accepted_so_far:
        validator.accept(text)
    return validator.check(candidate)


# ------------------------------------------------------------------ batches

@dataclass
class AugmentationBatch:
    source: Source
    samples: list[Document] = field(default_factory=list)
    provenance: dict[str, list[str]] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    attempts: int = 0
    rejected: int = 0
    rejection_reasons: Counter = field(default_factory=Counter)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def params_digest(self) -> str:
        return hashlib.sha256(canonical_bytes(self.params)).hexdigest()[:16]

    def _add(self, doc: Document, provenance: list[str]) -> None:
        self.samples.append(doc)
        self.provenance[doc.id] = provenance

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        digest = self.params_digest
        with path.open("w", encoding="utf-8") as fh:
            for d in self.samples:
                row = {**d.to_record(), "provenance": self.provenance[d.id], "params_digest": digest}
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "AugmentationBatch":
        samples, provenance, source = [], {}, None
        with Path(path).open(encoding="utf-8") as fh:
            for raw in fh:
                if not raw.strip():
                    continue
                row = json.loads(raw)
                doc = Document(row["id"], row["text"], Label(row["label"]), Source(row["source"]))
                source = source or doc.source
                samples.append(doc)
                provenance[doc.id] = list(row["provenance"])
        if source is None:
            raise AugmentationError(f"{path}: empty batch file")
        return cls(source, samples, provenance)

    def summary(self) -> dict:
        return {
            "source": self.source.value,
            "samples": len(self.samples),
            "attempts": self.attempts,
            "rejected": self.rejected,
            "rejection_reasons": dict(sorted(self.rejection_reasons.items())),
            "params_digest": self.params_digest,
        }


_MODES = {"single": Source.SINGLE_CLASS_GEN, "dual": Source.DUAL_CLASS_GEN}
_ID_PREFIX = {
    Source.SINGLE_CLASS_GEN: "scg",
    Source.DUAL_CLASS_GEN: "dcg",
    Source.BACKTRANSLATION: "bt",
}


def generate_prompted(
    corpus: Corpus,
    mode: str,
    target_count: int,
    params: GenerationParams | None,
    provider,
    seed: int = 0,
    examples_per_class: int = EXAMPLES_PER_CLASS,
    attempt_factor: int = 10,
    validation: ValidationConfig | None = None,
) -> AugmentationBatch:
    """Prompt the provider until ``target_count`` candidates pass validation.

    Every attempt draws fresh examples (without replacement inside one prompt).
    Raises ``AugmentationError`` carrying the partial batch once
    ``attempt_factor * target_count`` attempts are spent.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be 'single' or 'dual', got {mode!r}")
    if target_count < 0:
        raise ValueError("target_count must be non-negative")
    source = _MODES[mode]
    params = params or GenerationParams()
    k = EXAMPLES_PER_CLASS if mode == "dual" else examples_per_class
    positives = corpus.with_label(Label.POSITIVE)
    negatives = corpus.with_label(Label.NEGATIVE)
    if len(positives) < k:
        raise ValueError(f"need at least {k} Positive documents, corpus has {len(positives)}")
    if mode == "dual" and len(negatives) < EXAMPLES_PER_CLASS:
        raise ValueError(f"dual mode needs at least {EXAMPLES_PER_CLASS} Negative documents")

    batch = AugmentationBatch(
        source, params={"mode": mode, "examples_per_class": k, "seed": seed,
                        "generation": params.__dict__.copy()}
    )
    if target_count == 0:
        return batch
    rng = random.Random(seed)
    validator = Validator(corpus, validation)
    budget = attempt_factor * target_count
    prefix = _ID_PREFIX[source]
    while len(batch.samples) < target_count:
        if batch.attempts >= budget:
            raise AugmentationError(
                f"{mode}-class generation exhausted {budget} attempts with "
                f"{len(batch.samples)}/{target_count} samples accepted "
                f"(shortfall {target_count - len(batch.samples)})",
                batch,
            )
        pos = rng.sample(positives, k)
        if mode == "dual":
            neg = rng.sample(negatives, EXAMPLES_PER_CLASS)
            prompt = build_dual_class_prompt([d.raw_text for d in neg], [d.raw_text for d in pos])
            used = [d.id for d in neg] + [d.id for d in pos]
        else:
            prompt = build_single_class_prompt([d.raw_text for d in pos])
            used = [d.id for d in pos]
        batch.attempts += 1
        text = clean_completion(provider.chat_generate(prompt, params))
        verdict = validator.check(text)
        if not verdict:
            batch.rejected += 1
            batch.rejection_reasons[verdict.reason] += 1
            continue
        validator.accept(text)
        doc_id = f"{prefix}-{len(batch.samples) + 1:05d}"
        batch._add(Document(doc_id, text, Label.POSITIVE, source), used)
    logger.info("%s: %d samples in %d attempts", source.value, len(batch.samples), batch.attempts)
    return batch


def backtranslate(
    documents: Sequence[Document],
    pivot_lang: str = "en",
    provider=None,
    source_lang: str = "id",
    corpus: Corpus | Sequence[Document] | None = None,
    validation: ValidationConfig | None = None,
) -> AugmentationBatch:
    """Round-trip each document through ``pivot_lang``; failing outputs are dropped."""
    documents = list(documents)
    if not documents:
        raise ValueError("backtranslate needs at least one document")
    if pivot_lang == source_lang:
        raise ValueError("pivot language must differ from the corpus language")
    if provider is None:
        raise ValueError("backtranslate needs a translation provider")
    batch = AugmentationBatch(
        Source.BACKTRANSLATION, params={"pivot": pivot_lang, "source_lang": source_lang}
    )
    validator = Validator(corpus if corpus is not None else documents, validation)
    for doc in documents:
        batch.attempts += 1
        pivot_text = provider.translate(doc.raw_text, source_lang, pivot_lang)
        back = provider.translate(pivot_text, pivot_lang, source_lang).strip()
        verdict = validator.check(back)
        if not verdict:
            batch.rejected += 1
            batch.rejection_reasons[verdict.reason] += 1
            continue
        validator.accept(back)
        batch._add(Document(f"bt-{doc.id}", back, Label.POSITIVE, Source.BACKTRANSLATION), [doc.id])
    if not batch.samples:
        raise AugmentationError(
            f"backtranslation rejected all {len(documents)} samples "
            f"({dict(batch.rejection_reasons)})",
            batch,
        )
    if batch.rejected:
        logger.warning("backtranslation dropped %d of %d samples: %s", batch.rejected,
                       len(documents), dict(batch.rejection_reasons))
    return batch
