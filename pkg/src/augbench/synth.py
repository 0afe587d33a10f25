"""Seeded imbalanced two-class corpus built from token templates.

Each class has its own dominant vocabulary, split into topics so that a small
minority class covers it only sparsely; both classes share a larger pool of
noise words. Vocabulary words come in synonym groups that share an English gloss,
which gives the mock translator something to paraphrase with.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Document, Label, Source

_ONSETS = ["b", "c", "d", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "w", "y", "ng", "ny"]
_VOWELS = ["a", "i", "u", "e", "o"]


@dataclass(frozen=True)
class SynthConfig:
    n_negative: int = 2000
    n_positive: int = 100
    positive_vocab: int = 240
    negative_vocab: int = 240
    noise_vocab: int = 400
    min_len: int = 8
    max_len: int = 18
    topics: int = 8
    class_token_rate: float = 0.25
    cross_token_rate: float = 0.04
    handle_rate: float = 0.15
    number_rate: float = 0.15
    seed: int = 0


def _words(rng: random.Random, n: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(rng.randint(2, 3)))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _zipf_weights(n: int, s: float = 1.0) -> list[float]:
    return [1.0 / (r + 1) ** s for r in range(n)]


class SyntheticLexicon:
    def __init__(self, config: SynthConfig):
        rng = random.Random(f"lexicon-{config.seed}")
        taken: set[str] = set()
        self.positive = _words(rng, config.positive_vocab, taken)
        self.negative = _words(rng, config.negative_vocab, taken)
        self.noise = _words(rng, config.noise_vocab, taken)
        self.gloss: dict[str, str] = {}
        groups: dict[str, list[str]] = {}
        for vocab, tag in ((self.positive, "p"), (self.negative, "n"), (self.noise, "x")):
            # consecutive words form synonym groups of size 2
            for i, w in enumerate(vocab):
                g = f"{tag}{i // 2}"
                self.gloss[w] = g
                groups.setdefault(g, []).append(w)
        self.groups = groups

    def translation_table(self, source_lang: str = "id", pivot_lang: str = "en") -> dict:
        return {
            (source_lang, pivot_lang): dict(self.gloss),
            (pivot_lang, source_lang): {g: list(ws) for g, ws in self.groups.items()},
        }


def generate(config: SynthConfig | None = None) -> tuple[Corpus, SyntheticLexicon]:
    config = config or SynthConfig()
    lex = SyntheticLexicon(config)
    rng = random.Random(f"corpus-{config.seed}")
    pos_w = _zipf_weights(len(lex.positive), 0.8)
    neg_w = _zipf_weights(len(lex.negative), 0.8)
    noise_w = _zipf_weights(len(lex.noise), 1.0)

    def topic_slices(vocab):
        size = max(1, len(vocab) // config.topics)
        return [vocab[i * size:(i + 1) * size] for i in range(config.topics)]

    pos_topics = topic_slices(lex.positive)
    neg_topics = topic_slices(lex.negative)

    def sample_doc(label: Label) -> str:
        t = rng.randrange(config.topics)
        if label is Label.POSITIVE:
            own, other, other_w = pos_topics[t], lex.negative, neg_w
        else:
            own, other, other_w = neg_topics[t], lex.positive, pos_w
        own_w = _zipf_weights(len(own), 0.8)
        n = rng.randint(config.min_len, config.max_len)
        tokens = []
        for _ in range(n):
            u = rng.random()
            if u < config.class_token_rate:
                tokens.append(rng.choices(own, own_w)[0])
            elif u < config.class_token_rate + config.cross_token_rate:
                tokens.append(rng.choices(other, other_w)[0])
            else:
                tokens.append(rng.choices(lex.noise, noise_w)[0])
        if rng.random() < config.handle_rate:
            tokens.insert(0, "@" + rng.choice(lex.noise) + str(rng.randint(1, 99)))
        if rng.random() < config.number_rate:
            tokens.insert(rng.randint(0, len(tokens)), str(rng.randint(1, 2024)))
        if rng.random() < 0.3:
            tokens[-1] += rng.choice(["!", "!!", "?", "..."])
        return " ".join(tokens)

    labels = [Label.NEGATIVE] * config.n_negative + [Label.POSITIVE] * config.n_positive
    rng.shuffle(labels)
    docs = [
        Document(f"syn-{i + 1:05d}", sample_doc(lab), lab, Source.ORIGINAL)
        for i, lab in enumerate(labels)
    ]
    return Corpus(tuple(docs), "synthetic"), lex
