import json
from pathlib import Path

import pytest

from augbench.cli import EXIT_DATA, EXIT_OK, EXIT_PROVIDER, EXIT_USAGE, main

SMALL = ["--n-negative", "300", "--n-positive", "40"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    o = ["--out", str(out)]
    assert main(["synth-corpus", *o, *SMALL]) == EXIT_OK
    assert main(["balance", *o]) == EXIT_OK
    assert main(["augment", *o, "--target", "40"]) == EXIT_OK
    return out


def test_stage_artifacts(workdir):
    balanced = (workdir / "balanced.jsonl").read_text().splitlines()
    assert len(balanced) == 120
    names = sorted(p.name for p in (workdir / "augment").glob("*.jsonl"))
    assert names == ["backtranslation.jsonl", "dual.jsonl", "single.jsonl"]
    dual = (workdir / "augment" / "dual.jsonl").read_text().splitlines()
    assert len(dual) == 40
    manifest = json.loads((workdir / "manifests" / "augment.json").read_text())
    assert manifest["command"] == "augment"
    assert manifest["config"]["target"] == 40
    assert manifest["provider_calls"]


def test_trainval_emits_sixteen_rows(workdir, capsys):
    assert main(["trainval", "--out", str(workdir), "--k", "3"]) == EXIT_OK
    rows = [l for l in capsys.readouterr().out.splitlines() if l.startswith("|")][2:]
    assert len(rows) == 16
    data = json.loads((workdir / "eval.json").read_text())
    assert len(data["entries"]) == 16
    assert {e["cv_mode"] for e in data["entries"]} == {"holdout_original"}


def test_semsim_project_report(workdir):
    o = ["--out", str(workdir)]
    assert main(["semsim", *o]) == EXIT_OK
    assert main(["project", *o, "--tsne-iterations", "300", "--perplexity", "10"]) == EXIT_OK
    assert main(["report", *o]) == EXIT_OK
    report = json.loads((workdir / "report.json").read_text())
    assert report["sections"] == ["Dataset Composition", "Model Performance",
                                  "Semantic Similarity", "Figures"]
    for fig in report["figures"]:
        assert (workdir / fig["path"]).exists()


def test_augment_target_306(tmp_path):
    o = ["--out", str(tmp_path)]
    assert main(["synth-corpus", *o, *SMALL]) == EXIT_OK
    assert main(["balance", *o]) == EXIT_OK
    assert main(["augment", *o, "--method", "dual", "--target", "306", "--seed", "7"]) == EXIT_OK
    assert len((tmp_path / "augment" / "dual.jsonl").read_text().splitlines()) == 306


def test_usage_errors(tmp_path, capsys):
    assert main(["augment", "--bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["trainval", "--out", str(tmp_path), "--model", "SVM"]) == EXIT_USAGE
    assert main(["ingest", "--out", str(tmp_path)]) == EXIT_USAGE
    cfg = tmp_path / "c.toml"
    cfg.write_text("unknown_key = 1\n")
    assert main(["synth-corpus", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "unknown keys" in capsys.readouterr().err


def test_data_errors(tmp_path):
    o = ["--out", str(tmp_path)]
    assert main(["ingest", *o, "--corpus", str(tmp_path / "missing.csv")]) == EXIT_DATA
    assert main(["trainval", *o]) == EXIT_DATA
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "text": "x", "label": "Maybe"}\n')
    assert main(["ingest", *o, "--corpus", str(bad)]) == EXIT_DATA


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'out = "{tmp_path / "from_file"}"\nn_positive = 7\nn_negative = 50\n')
    out = tmp_path / "from_flag"
    assert main(["synth-corpus", "--config", str(cfg), "--out", str(out),
                 "--n-positive", "9"]) == EXIT_OK
    manifest = json.loads((out / "manifests" / "synth-corpus.json").read_text())
    assert manifest["config"]["n_positive"] == 9
    assert manifest["config"]["n_negative"] == 50
    assert not (tmp_path / "from_file").exists()
    assert len((out / "corpus.jsonl").read_text().splitlines()) == 59


def test_unreachable_provider_exits_3(tmp_path, monkeypatch):
    monkeypatch.setenv("AUGBENCH_TEST_KEY", "x")
    monkeypatch.setattr("time.sleep", lambda s: None)
    o = ["--out", str(tmp_path)]
    assert main(["synth-corpus", *o, *SMALL]) == EXIT_OK
    assert main(["balance", *o]) == EXIT_OK
    code = main(["augment", *o, "--method", "dual", "--target", "2", "--provider", "http",
                 "--chat-endpoint", "http://127.0.0.1:9/v1/chat/completions",
                 "--api-key-env", "AUGBENCH_TEST_KEY"])
    assert code == EXIT_PROVIDER


def test_replay_without_cache_is_provider_error(tmp_path):
    o = ["--out", str(tmp_path)]
    assert main(["synth-corpus", *o, *SMALL]) == EXIT_OK
    assert main(["balance", *o]) == EXIT_OK
    assert main(["augment", *o, "--method", "single", "--target", "3",
                 "--cache-mode", "replay"]) == EXIT_PROVIDER
