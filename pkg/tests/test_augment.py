from pathlib import Path

import pytest

from augbench import synth
from augbench.augment import (
    AugmentationBatch, AugmentationError, ValidationConfig, Validator,
    backtranslate, build_dual_class_prompt, build_single_class_prompt,
    generate_prompted, validate_generated,
)
from augbench.corpus import Document, Label, Source
from augbench.providers import GenerationParams, mock_chat, mock_translator

from conftest import make_corpus

GOLDEN = Path(__file__).parent / "data" / "dual_prompt_golden.txt"
PLACEHOLDERS = [f"{{example{i}}}" for i in range(1, 6)]


@pytest.fixture(scope="module")
def synthetic():
    corpus, lex = synth.generate(synth.SynthConfig(n_negative=400, n_positive=60, seed=0))
    return corpus, lex.translation_table("id", "en")


def test_dual_prompt_matches_golden_template():
    out = build_dual_class_prompt(PLACEHOLDERS, PLACEHOLDERS)
    assert out.encode("utf-8") == GOLDEN.read_bytes()


def test_dual_prompt_structure():
    neg = [f"netral {i}" for i in range(5)]
    pos = [f"kasar {i}" for i in range(5)]
    out = build_dual_class_prompt(neg, pos)
    assert out.count("The following tweets belong to the category of") == 2
    assert out.index("'non-hate speech towards gender'") < out.index("'hate speech towards gender':")
    for i in range(5):
        assert f"\n{i + 1}. netral {i}\n" in out
        assert f"\n{i + 1}. kasar {i}" in out
    assert out.endswith("Generate the tweet in Indonesian language.\nGenerated tweet:")


@pytest.mark.parametrize("n_neg,n_pos", [(4, 5), (5, 6), (0, 5)])
def test_dual_prompt_arity(n_neg, n_pos):
    with pytest.raises(ValueError, match="exactly 5"):
        build_dual_class_prompt(["x"] * n_neg, ["y"] * n_pos)


def test_prompt_passes_newlines_through_and_rejects_blanks():
    out = build_dual_class_prompt(["a\nb"] + ["n"] * 4, ["p"] * 5)
    assert "1. a\nb\n2. n" in out
    with pytest.raises(ValueError):
        build_dual_class_prompt(["  "] + ["n"] * 4, ["p"] * 5)


def test_single_prompt():
    out = build_single_class_prompt(["satu", "dua"])
    assert "non-hate" not in out
    assert out.startswith("The following tweets belong to the category of 'hate speech towards gender':\n\n1. satu\n2. dua\n\n")
    assert out.endswith("Generated tweet:")
    with pytest.raises(ValueError):
        build_single_class_prompt([])


@pytest.mark.parametrize("mode", ["dual", "single"])
def test_generate_prompted_reaches_target(synthetic, mode):
    corpus, _ = synthetic
    batch = generate_prompted(corpus, mode, 306, GenerationParams(), mock_chat(seed=0), seed=0)
    assert len(batch) == 306
    texts = [d.normalized() for d in batch.samples]
    assert len(set(texts)) == 306
    assert not set(texts) & {d.normalized() for d in corpus}
    for d in batch.samples:
        assert d.label is Label.POSITIVE
        assert d.source is (Source.DUAL_CLASS_GEN if mode == "dual" else Source.SINGLE_CLASS_GEN)
        prov = batch.provenance[d.id]
        assert len(prov) == (10 if mode == "dual" else 5)
        assert all(pid in corpus for pid in prov)
    if mode == "dual":
        d = batch.samples[0]
        labels = [corpus.get(pid).label for pid in batch.provenance[d.id]]
        assert labels == [Label.NEGATIVE] * 5 + [Label.POSITIVE] * 5


def test_generate_prompted_deterministic(synthetic):
    corpus, _ = synthetic
    a = generate_prompted(corpus, "dual", 40, None, mock_chat(seed=2), seed=5)
    b = generate_prompted(corpus, "dual", 40, None, mock_chat(seed=2), seed=5)
    assert [d.raw_text for d in a.samples] == [d.raw_text for d in b.samples]
    assert a.provenance == b.provenance


def test_generate_prompted_edge_cases(small_corpus):
    assert len(generate_prompted(small_corpus, "dual", 0, None, mock_chat())) == 0
    with pytest.raises(ValueError):
        generate_prompted(small_corpus, "triple", 5, None, mock_chat())
    with pytest.raises(ValueError):
        generate_prompted(small_corpus, "dual", -1, None, mock_chat())
    with pytest.raises(ValueError, match="Positive"):
        generate_prompted(make_corpus(3, 20), "dual", 5, None, mock_chat())


def test_generate_prompted_budget_exhaustion(small_corpus):
    class Constant:
        calls = 0

        def chat_generate(self, prompt, params=None):
            Constant.calls += 1
            return "selalu kalimat yang sama persis"

    with pytest.raises(AugmentationError) as info:
        generate_prompted(small_corpus, "single", 7, None, Constant())
    assert Constant.calls == 70
    partial = info.value.batch
    assert len(partial) == 1 and partial.rejected == 69
    assert partial.rejection_reasons["exact-duplicate"] == 69
    assert "shortfall 6" in str(info.value)


def test_backtranslate_identity_rejects_everything(small_corpus):
    pos = small_corpus.with_label(Label.POSITIVE)
    with pytest.raises(AugmentationError, match="rejected all"):
        backtranslate(pos, "en", mock_translator(), corpus=small_corpus)


def test_backtranslate_perturbing_translator(synthetic):
    corpus, table = synthetic
    pos = corpus.with_label(Label.POSITIVE)
    tr = mock_translator(table, seed=0, reorder=True)
    batch = backtranslate(pos, "en", tr, corpus=corpus)
    assert len(batch) + batch.rejected == len(pos)
    assert len(batch) >= 0.9 * len(pos)
    for d in batch.samples:
        (orig,) = batch.provenance[d.id]
        assert d.id == f"bt-{orig}" and d.source is Source.BACKTRANSLATION
        assert d.normalized() != corpus.get(orig).normalized()


def test_backtranslate_argument_errors(small_corpus):
    with pytest.raises(ValueError):
        backtranslate([], "en", mock_translator())
    pos = small_corpus.with_label(Label.POSITIVE)
    with pytest.raises(ValueError):
        backtranslate(pos, "id", mock_translator())
    with pytest.raises(ValueError):
        backtranslate(pos, "en", None)


def test_validator_reasons():
    corpus = [Document("a", "ini kalimat asli dari korpus", Label.POSITIVE)]
    v = Validator(corpus, ValidationConfig(min_tokens=3, max_tokens=8))
    assert v.check("   !!! ").reason == "empty"
    assert v.check("dua kata").reason == "too-short"
    assert v.check(" ".join(["x"] * 9)).reason == "too-long"
    assert v.check("Ini KALIMAT asli dari korpus!").reason == "exact-duplicate"
    base = "satu dua tiga empat lima enam"
    assert v.check(base)
    v.accept(base)
    assert v.check(base).reason == "exact-duplicate"
    # one extra word: 9 shared of 10 trigrams, Jaccard 0.9 is not above the cap
    long = "a b c d e f g h i j k"
    v2 = Validator([], ValidationConfig(max_tokens=100))
    v2.accept(long)
    assert v2.check(long + " l")
    # 11 shared of 12 trigrams: 0.917 > 0.9
    longer = "a b c d e f g h i j k l m"
    v3 = Validator([])
    v3.accept(longer)
    assert v3.check(longer + " n").reason == "near-duplicate"
    assert validate_generated("kalimat baru yang cukup panjang", corpus, ["lain sama sekali berbeda"])


def test_batch_save_load_roundtrip(tmp_path, synthetic):
    corpus, _ = synthetic
    batch = generate_prompted(corpus, "single", 12, None, mock_chat(seed=1), seed=1)
    path = batch.save(tmp_path / "single.jsonl")
    back = AugmentationBatch.load(path)
    assert back.samples == batch.samples
    assert back.provenance == batch.provenance
    assert back.source is Source.SINGLE_CLASS_GEN
    (tmp_path / "empty.jsonl").write_text("")
    with pytest.raises(AugmentationError):
        AugmentationBatch.load(tmp_path / "empty.jsonl")
