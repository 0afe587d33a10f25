import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augbench.corpus import (
    Corpus, CorpusError, Document, Label, Source, balance, composition, ingest, normalize,
    write_corpus,
)
from conftest import make_corpus


@pytest.mark.parametrize("raw,expected", [
    ("halo dunia", "halo dunia"),
    ("@Budi kamu 123 jelek!!", "[USERNAME] kamu [NUM] jelek"),
    ("RT @a @b 7x7", "rt [USERNAME] [USERNAME] [NUM]x[NUM]"),
    ("", ""),
    ("   \t\n ", ""),
    ("Café  ÉTÉ", "café été"),
    ("[NUM] literal", "[NUM] literal"),
])
def test_normalize_examples(raw, expected):
    assert normalize(raw) == expected


@settings(max_examples=300, deadline=None)
@given(st.text())
def test_normalize_idempotent_and_clean(s):
    once = normalize(s)
    assert normalize(once) == once
    assert "@" not in once
    assert not any(ch.isdigit() for ch in once)
    assert once == once.strip()
    assert "  " not in once


def test_label_parsing():
    assert Label.parse("1") is Label.POSITIVE
    assert Label.parse("gender_hs") is Label.POSITIVE
    assert Label.parse("0") is Label.NEGATIVE
    assert Label.parse("non_gender_hs") is Label.NEGATIVE
    with pytest.raises(CorpusError):
        Label.parse("maybe")


def test_ingest_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,text,label\na,halo @x,1\nb,dunia 2,0\n", encoding="utf-8")
    c = ingest(p)
    assert len(c) == 2
    assert [d.id for d in c] == ["a", "b"]
    assert len(c.with_label(Label.POSITIVE)) == 1
    assert all(d.source is Source.ORIGINAL for d in c)


def test_ingest_bad_label_names_line(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,text,label\na,ok,1\nb,bad,maybe\n", encoding="utf-8")
    with pytest.raises(CorpusError, match=r":3:"):
        ingest(p)


def test_ingest_duplicate_id(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "a", "text": "x y", "label": 1}\n{"id": "a", "text": "z", "label": 0}\n')
    with pytest.raises(CorpusError, match="duplicate"):
        ingest(p)


def test_ingest_jsonl_auto_ids_and_table_one_counts(tmp_path):
    p = tmp_path / "c.jsonl"
    with p.open("w") as fh:
        for i in range(306):
            fh.write(json.dumps({"text": f"pos {i}", "label": "gender_hs"}) + "\n")
        for i in range(12863):
            fh.write(json.dumps({"text": f"neg {i}", "label": "non_gender_hs"}) + "\n")
    c = ingest(p)
    comp = composition(c)
    assert comp[(Source.ORIGINAL, Label.POSITIVE)] == 306
    assert comp[(Source.ORIGINAL, Label.NEGATIVE)] == 12863
    assert c.documents[0].id == "doc-1"


def test_write_roundtrip(tmp_path, small_corpus):
    for name in ("c.csv", "c.jsonl"):
        path = write_corpus(small_corpus, tmp_path / name)
        back = ingest(path)
        assert [(d.id, d.raw_text, d.label) for d in back] == \
            [(d.id, d.raw_text, d.label) for d in small_corpus]


def test_balance_ratios():
    c = make_corpus(306, 12863)
    one = balance(c, 1.0, seed=3)
    assert len(one.with_label(Label.NEGATIVE)) == 306
    two = balance(c, 2.0, seed=3)
    assert len(two.with_label(Label.NEGATIVE)) == 612
    assert len(two.with_label(Label.POSITIVE)) == 306
    assert {d.id for d in balance(c, 2.0, seed=3)} == {d.id for d in two}
    assert {d.id for d in two.with_label(Label.POSITIVE)} == \
        {d.id for d in c.with_label(Label.POSITIVE)}


def test_balance_already_balanced_unchanged():
    c = make_corpus(10, 10)
    assert [d.id for d in balance(c, 1.0, seed=0)] == [d.id for d in c]


def test_balance_errors():
    with pytest.raises(CorpusError):
        balance(make_corpus(0, 10), 1.0)
    with pytest.raises(CorpusError):
        balance(make_corpus(10, 5), 1.0)


def test_composition_contracts():
    empty = Corpus((), "empty")
    assert all(v == 0 for v in composition(empty).values())
    c = make_corpus(306, 612)
    dual = [Document(f"d{i}", f"gen text {i}", Label.POSITIVE, Source.DUAL_CLASS_GEN)
            for i in range(306)]
    comp = composition(c.extend(dual))
    assert comp[(Source.DUAL_CLASS_GEN, Label.POSITIVE)] == 306
    assert comp[(Source.DUAL_CLASS_GEN, Label.NEGATIVE)] == 0
    assert sum(comp.values()) == len(c) + 306
    assert all(v >= 0 for v in comp.values())


def test_document_invariants():
    with pytest.raises(CorpusError):
        Document("", "x", Label.POSITIVE)
    with pytest.raises(CorpusError):
        Document("a", "   ", Label.POSITIVE)
    with pytest.raises(CorpusError):
        Corpus((Document("a", "x", Label.POSITIVE), Document("a", "y", Label.NEGATIVE)), "dup")
