"""Stage functions shared by the CLI subcommands and ``run_all``.

Everything a stage writes lands under ``config.out``:

    corpus.jsonl, lexicon.json        ingest / synth-corpus
    balanced.jsonl                    balance
    augment/<method>.jsonl            augment (plus a .summary.json)
    eval.json, performance.md         trainval
    similarity.json                   semsim
    figures/*.svg|csv, projections.json   project
    composition.json                  augment / run-all
    report.md, report.json            report
    manifests/<command>.json          every command
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features as feat
from . import synth
from .analysis import (
    SimilarityRow,
    TsneConfig,
    assemble_report,
    emit_scatter,
    pca_power_iteration,
    semantic_similarity,
    tsne,
)
from .augment import AugmentationBatch, backtranslate, generate_prompted
from .config import ConfigError, PipelineConfig
from .corpus import Corpus, Label, Source, balance, composition, ingest, write_corpus
from .eval import CONFIG_NAMES, CVMode, EvalReport, cross_validate
from .models import ClassifierSpec
from .providers import (
    GenerationParams,
    PrecomputedEmbeddings,
    ResponseCache,
    http_chat,
    http_embedder,
    http_translator,
    mock_chat,
    mock_embedder,
    mock_translator,
)

logger = logging.getLogger(__name__)

METHOD_SOURCE = {
    "backtranslation": Source.BACKTRANSLATION,
    "single": Source.SINGLE_CLASS_GEN,
    "dual": Source.DUAL_CLASS_GEN,
}
SOURCE_METHOD = {v: k for k, v in METHOD_SOURCE.items()}


class StageError(RuntimeError):
    """Wraps the failure of a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


# ---------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    cache_digests: list = field(default_factory=list)
    provider_calls: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    finished: float | None = None

    @classmethod
    def start(cls, command: str, cfg: PipelineConfig) -> "RunManifest":
        seeds = {k: getattr(cfg, k) for k in
                 ("synth_seed", "balance_seed", "seed", "cv_seed", "tsne_seed")}
        return cls(command, cfg.to_json(), seeds)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_artifact(self, path) -> None:
        if str(path) not in self.artifacts:
            self.artifacts.append(str(path))

    def deterministic_view(self) -> dict:
        """Everything except the timestamps; equal views imply equal outputs."""
        d = self.to_json()
        d.pop("started")
        d.pop("finished")
        return d

    def to_json(self) -> dict:
        return {
            "command": self.command, "config": self.config, "seeds": self.seeds,
            "inputs": dict(sorted(self.inputs.items())), "artifacts": sorted(self.artifacts),
            "cache_digests": sorted(self.cache_digests), "provider_calls": self.provider_calls,
            "started": self.started, "finished": self.finished,
        }

    def write(self, out_dir) -> Path:
        self.finished = time.time()
        return write_json(Path(out_dir) / "manifests" / f"{self.command}.json", self.to_json())


# ---------------------------------------------------------------- providers

class Providers:
    """Lazily built clients sharing one response cache."""

    def __init__(self, cfg: PipelineConfig, translation_table: dict | None = None):
        self.cfg = cfg
        self.translation_table = translation_table
        self.cache = ResponseCache(cfg.cache_path, cfg.cache_mode)
        self._clients: dict = {}

    def _get(self, name, factory):
        if name not in self._clients:
            self._clients[name] = factory()
        return self._clients[name]

    @property
    def chat(self):
        cfg = self.cfg
        if cfg.provider == "mock":
            return self._get("chat", lambda: mock_chat(seed=cfg.seed, cache=self.cache))
        return self._get("chat", lambda: http_chat(cfg.chat_endpoint, cfg.api_key_env,
                                                   cache=self.cache))

    @property
    def translator(self):
        cfg = self.cfg
        if cfg.provider == "mock":
            return self._get("translate", lambda: mock_translator(
                self.translation_table, seed=cfg.seed, reorder=True, cache=self.cache))
        if not cfg.translate_endpoint:
            raise ConfigError("provider=http needs translate_endpoint for backtranslation")
        return self._get("translate", lambda: http_translator(cfg.translate_endpoint,
                                                              cache=self.cache))

    @property
    def embedder(self):
        cfg = self.cfg
        if cfg.embeddings:
            return self._get("embed", lambda: PrecomputedEmbeddings.load(cfg.embeddings))
        if cfg.provider == "mock":
            return self._get("embed", lambda: mock_embedder(cfg.embed_dimension, cache=self.cache))
        if not cfg.embed_endpoint:
            raise ConfigError("provider=http needs embed_endpoint or an embeddings file")
        return self._get("embed", lambda: http_embedder(cfg.embed_endpoint, cache=self.cache))

    def calls(self) -> dict:
        return {k: c.network_calls for k, c in sorted(self._clients.items())
                if hasattr(c, "network_calls")}

    def record(self, manifest: RunManifest) -> None:
        manifest.provider_calls = self.calls()
        manifest.cache_digests = sorted(self.cache.touched)


# ---------------------------------------------------------------- corpus I/O

def save_translation_table(table: dict, path) -> Path:
    return write_json(path, {f"{s}->{t}": m for (s, t), m in sorted(table.items())})


def load_translation_table(path) -> dict:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    table = {}
    for key, mapping in raw.items():
        src, _, tgt = key.partition("->")
        if not tgt:
            raise ValueError(f"{path}: translation table key {key!r} is not 'src->tgt'")
        table[(src, tgt)] = mapping
    return table


def synth_corpus(cfg: PipelineConfig) -> tuple[Corpus, dict]:
    sc = synth.SynthConfig(n_negative=cfg.n_negative, n_positive=cfg.n_positive,
                           seed=cfg.synth_seed)
    corpus, lex = synth.generate(sc)
    return corpus, lex.translation_table(cfg.source_lang, cfg.pivot_lang)


def load_corpus(cfg: PipelineConfig, manifest: RunManifest | None = None):
    """The configured corpus file, or the synthetic corpus when none is set."""
    if cfg.corpus:
        corpus = ingest(cfg.corpus, cfg.corpus_format)
        table = load_translation_table(cfg.translation_table) if cfg.translation_table else None
        if manifest is not None:
            manifest.add_input(cfg.corpus)
            if cfg.translation_table:
                manifest.add_input(cfg.translation_table)
        return corpus, table
    return synth_corpus(cfg)


def load_batches(paths) -> dict[Source, AugmentationBatch]:
    out = {}
    for p in paths:
        b = AugmentationBatch.load(p)
        out[b.source] = b
    return dict(sorted(out.items(), key=lambda kv: list(Source).index(kv[0])))


def batch_path(out: Path, method: str) -> Path:
    return out / "augment" / f"{method}.jsonl"


# ---------------------------------------------------------------- stages

def stage_balance(cfg: PipelineConfig, corpus: Corpus) -> Corpus:
    return balance(corpus, cfg.balance_ratio, cfg.balance_seed)


def stage_augment(cfg: PipelineConfig, balanced: Corpus, method: str,
                  providers: Providers) -> AugmentationBatch:
    positives = balanced.with_label(Label.POSITIVE)
    target = cfg.target if cfg.target is not None else len(positives)
    if method == "backtranslation":
        if target > len(positives):
            raise ValueError(f"backtranslation yields at most one sample per Positive "
                             f"document ({len(positives)}), target was {target}")
        return backtranslate(positives[:target], cfg.pivot_lang, providers.translator,
                             cfg.source_lang, corpus=balanced)
    params = GenerationParams(cfg.temperature, cfg.top_p, cfg.max_tokens, cfg.model_name)
    return generate_prompted(balanced, method, target, params, providers.chat, seed=cfg.seed)


def stage_trainval(cfg: PipelineConfig, balanced: Corpus,
                   batches: dict[Source, AugmentationBatch]) -> EvalReport:
    report = EvalReport()
    configs = [None] + list(batches.values())
    for batch in configs:
        for model in cfg.models:
            spec = ClassifierSpec(model, seed=cfg.cv_seed)
            entry = cross_validate(balanced, batch, spec, cfg.k, cfg.cv_seed, CVMode(cfg.cv_mode))
            logger.info("%s / %s: acc %.3f F1 %.3f", entry.config, entry.model,
                        entry.accuracy[0], entry.f1_macro[0])
            report.entries.append(entry)
    return report


def stage_semsim(cfg: PipelineConfig, balanced: Corpus, batches, providers: Providers):
    originals = balanced.with_label(Label.POSITIVE)
    return [SimilarityRow.for_source(src, semantic_similarity(originals, b, providers.embedder))
            for src, b in batches.items()]


def _projection_matrix(cfg: PipelineConfig, docs, providers: Providers) -> np.ndarray:
    use_embeddings = cfg.projection_input == "embeddings" or (
        cfg.projection_input == "auto"
        and (cfg.embeddings or (cfg.provider == "http" and cfg.embed_endpoint))
    )
    if use_embeddings:
        return np.asarray(providers.embedder.embed_documents(docs), dtype=np.float64)
    tokens = [feat.tokenize(d.normalized()) for d in docs]
    X = feat.fit(tokens).transform_many(tokens)
    scores, _, _ = pca_power_iteration(X, 50, seed=cfg.tsne_seed)
    return scores


def stage_project(cfg: PipelineConfig, balanced: Corpus, batches, providers: Providers,
                  out: Path) -> dict:
    """One figure for the originals, one per augmentation overlaid on them."""
    tcfg = TsneConfig(perplexity=cfg.perplexity, iterations=cfg.tsne_iterations)
    sets = {"original": list(balanced.documents)}
    for src, b in batches.items():
        sets[f"original+{SOURCE_METHOD[src]}"] = list(balanced.documents) + list(b.samples)
    results = {}
    for name, docs in sets.items():
        M = _projection_matrix(cfg, docs, providers)
        proj = tsne(M, tcfg, seed=cfg.tsne_seed, ids=[d.id for d in docs],
                    tags=[(d.source.value, d.label.value) for d in docs])
        svg, csv_path = emit_scatter(proj, out / "figures" / f"tsne-{name}.svg",
                                     title=f"t-SNE: {name}")
        results[name] = {"svg": svg, "csv": csv_path, "final_kl": proj.final_kl,
                         "initial_kl": proj.initial_kl, "n": len(docs)}
    return results


def full_composition(balanced: Corpus, batches) -> dict:
    combined = balanced.extend(d for b in batches.values() for d in b.samples)
    return composition(combined)


def composition_to_json(comp: dict) -> list:
    return [{"source": s.value, "label": lab.value, "count": n}
            for (s, lab), n in sorted(comp.items(), key=lambda kv: (list(Source).index(kv[0][0]),
                                                                   kv[0][1].value))]


def composition_from_json(rows: list) -> dict:
    return {(Source(r["source"]), Label(r["label"])): int(r["count"]) for r in rows}


def stage_report(out: Path):
    """Assemble report.md/json from whatever stage artifacts exist under ``out``."""
    comp = eval_report = sims = figs = None
    if (out / "composition.json").exists():
        comp = composition_from_json(json.loads((out / "composition.json").read_text()))
    if (out / "eval.json").exists():
        eval_report = EvalReport.from_json(json.loads((out / "eval.json").read_text()))
    if (out / "similarity.json").exists():
        sims = [SimilarityRow(r["method"], r["similarity"])
                for r in json.loads((out / "similarity.json").read_text())]
    if (out / "projections.json").exists():
        proj = json.loads((out / "projections.json").read_text())
        figs = {name: out / v["svg"] for name, v in proj.items()}
    if comp is None and eval_report is None and not sims and not figs:
        raise FileNotFoundError(f"no stage artifacts found under {out}")
    return assemble_report(comp, eval_report, sims, figs, out_dir=out)


def write_projection_index(out: Path, results: dict) -> Path:
    index = {name: {"svg": Path(r["svg"]).relative_to(out).as_posix(),
                    "csv": Path(r["csv"]).relative_to(out).as_posix(),
                    "n": r["n"], "final_kl": round(r["final_kl"], 6),
                    "initial_kl": round(r["initial_kl"], 6)}
             for name, r in results.items()}
    return write_json(out / "projections.json", index)


def _run_stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_all(cfg: PipelineConfig) -> dict:
    """ingest, balance, augment (each method), trainval, semsim, project, report."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.start("run-all", cfg)
    corpus, table = _run_stage("ingest", load_corpus, cfg, manifest)
    providers = Providers(cfg, table)
    manifest.add_artifact(write_corpus(corpus, out / "corpus.jsonl"))
    balanced = _run_stage("balance", stage_balance, cfg, corpus)
    manifest.add_artifact(write_corpus(balanced, out / "balanced.jsonl"))

    batches = {}
    for method in cfg.methods:
        batch = _run_stage("augment", stage_augment, cfg, balanced, method, providers)
        manifest.add_artifact(batch.save(batch_path(out, method)))
        write_json(batch_path(out, method).with_suffix(".summary.json"), batch.summary())
        batches[batch.source] = batch
    batches = dict(sorted(batches.items(), key=lambda kv: list(Source).index(kv[0])))
    manifest.add_artifact(write_json(out / "composition.json",
                                     composition_to_json(full_composition(balanced, batches))))

    report = _run_stage("trainval", stage_trainval, cfg, balanced, batches)
    (out / "eval.json").write_text(report.dumps() + "\n", encoding="utf-8")
    (out / "performance.md").write_text(report.to_markdown(), encoding="utf-8")
    manifest.add_artifact(out / "eval.json")

    sims = _run_stage("semsim", stage_semsim, cfg, balanced, batches, providers)
    manifest.add_artifact(write_json(out / "similarity.json",
                                     [{"method": r.method, "similarity": r.similarity}
                                      for r in sims]))

    results = _run_stage("project", stage_project, cfg, balanced, batches, providers, out)
    manifest.add_artifact(write_projection_index(out, results))
    for r in results.values():
        manifest.add_artifact(r["svg"])

    _run_stage("report", stage_report, out)
    manifest.add_artifact(out / "report.md")
    manifest.add_artifact(out / "report.json")
    providers.record(manifest)
    manifest_path = manifest.write(out)
    return {"report_md": out / "report.md", "report_json": out / "report.json",
            "manifest": manifest_path, "eval": report, "batches": batches,
            "provider_calls": manifest.provider_calls}


__all__ = [
    "CONFIG_NAMES", "METHOD_SOURCE", "Providers", "RunManifest", "StageError",
    "batch_path", "full_composition", "load_batches", "load_corpus", "load_translation_table",
    "run_all", "save_translation_table", "stage_augment", "stage_balance", "stage_project",
    "stage_report", "stage_semsim", "stage_trainval", "synth_corpus",
]
