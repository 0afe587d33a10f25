"""Command-line entry point: ``augbench <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 provider error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .augment import AugmentationError
from .config import ConfigError, PipelineConfig, build
from .corpus import CorpusError, Label, ingest, write_corpus
from .pipeline import (
    Providers,
    RunManifest,
    StageError,
    batch_path,
    composition_to_json,
    full_composition,
    load_batches,
    load_translation_table,
    run_all,
    save_translation_table,
    stage_augment,
    stage_balance,
    stage_project,
    stage_report,
    stage_semsim,
    stage_trainval,
    synth_corpus,
    write_json,
    write_projection_index,
)
from .providers import ProviderError

logger = logging.getLogger("augbench")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PROVIDER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag groups; every dest except ``input``/``augment`` is a config key
def _common(p):
    p.add_argument("--config", help="flat TOML config file; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging verbosity")


def _synth_flags(p):
    p.add_argument("--n-negative", type=int)
    p.add_argument("--n-positive", type=int)
    p.add_argument("--synth-seed", type=int)


def _corpus_flags(p):
    p.add_argument("--corpus", help="raw corpus (CSV or JSONL); omitted means synthetic")
    p.add_argument("--corpus-format", choices=["csv", "jsonl"])


def _balance_flags(p):
    p.add_argument("--balance-ratio", type=float, help="Negatives kept per Positive")
    p.add_argument("--balance-seed", type=int)


def _provider_flags(p):
    p.add_argument("--provider", choices=["mock", "http"])
    p.add_argument("--seed", type=int, help="generation seed")
    p.add_argument("--chat-endpoint")
    p.add_argument("--translate-endpoint")
    p.add_argument("--embed-endpoint")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.add_argument("--cache-dir")
    p.add_argument("--cache-mode", choices=["readwrite", "replay", "record"])


def _augment_flags(p):
    p.add_argument("--method", dest="methods", action="append",
                   choices=["backtranslation", "single", "dual"])
    p.add_argument("--target", type=int, help="samples per method (default: #Positives)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--top-p", type=float)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--model-name")
    p.add_argument("--source-lang")
    p.add_argument("--pivot-lang")
    p.add_argument("--translation-table", help="JSON word table for the mock translator")


def _eval_flags(p):
    p.add_argument("--model", dest="models", action="append",
                   help="classifier (repeatable): LogReg, NaiveBayes, RandomForest, GBT")
    p.add_argument("--k", type=int)
    p.add_argument("--cv-seed", type=int)
    p.add_argument("--cv-mode", choices=["holdout_original", "mixed"])


def _embed_flags(p):
    p.add_argument("--embeddings", help="precomputed embeddings JSONL {id, vector}")
    p.add_argument("--embed-dimension", type=int)


def _project_flags(p):
    p.add_argument("--perplexity", type=float)
    p.add_argument("--tsne-iterations", type=int)
    p.add_argument("--tsne-seed", type=int)
    p.add_argument("--projection-input", choices=["auto", "embeddings", "tfidf"])


def _inputs(p, augment=True):
    p.add_argument("--input", help="balanced corpus (default: <out>/balanced.jsonl)")
    if augment:
        p.add_argument("--augment", action="append",
                       help="augmentation batch JSONL (repeatable; default: <out>/augment/*.jsonl)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="augbench", description="Minority-class augmentation benchmark")
    parser.add_argument("--version", action="version", version=f"augbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-corpus", help="write the seeded synthetic corpus")
    _common(p); _synth_flags(p); _lang_only(p)
    p = sub.add_parser("ingest", help="validate a corpus file and write it as JSONL")
    _common(p); _corpus_flags(p)
    p = sub.add_parser("balance", help="subsample Negatives to a fixed ratio")
    _common(p); _balance_flags(p)
    p.add_argument("--input", help="corpus to balance (default: <out>/corpus.jsonl)")
    p = sub.add_parser("augment", help="generate minority-class samples")
    _common(p); _inputs(p, augment=False); _augment_flags(p); _provider_flags(p)
    p = sub.add_parser("trainval", help="cross-validate every model on every configuration")
    _common(p); _inputs(p); _eval_flags(p)
    p = sub.add_parser("semsim", help="centroid similarity of each augmentation")
    _common(p); _inputs(p); _provider_flags(p); _embed_flags(p)
    p = sub.add_parser("project", help="t-SNE scatter plots")
    _common(p); _inputs(p); _project_flags(p); _provider_flags(p); _embed_flags(p)
    p = sub.add_parser("report", help="assemble report.md and report.json")
    _common(p)
    p = sub.add_parser("run-all", help="every stage end to end")
    _common(p); _corpus_flags(p); _synth_flags(p); _balance_flags(p); _augment_flags(p)
    _provider_flags(p); _eval_flags(p); _embed_flags(p); _project_flags(p)
    return parser


def _lang_only(p):
    p.add_argument("--source-lang")
    p.add_argument("--pivot-lang")


_NOT_CONFIG = {"command", "config", "log_level", "input", "augment"}


def _config_from(args) -> PipelineConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return build(args.config, overrides)


# ---------------------------------------------------------------- commands

def _existing(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _balanced_input(args, cfg, manifest):
    path = Path(args.input) if args.input else _existing(Path(cfg.out) / "balanced.jsonl",
                                                         "balanced corpus")
    manifest.add_input(path)
    return ingest(path)


def _batch_files(out: Path) -> list[Path]:
    return sorted(p for p in (out / "augment").glob("*.jsonl")
                  if not p.name.endswith(".partial.jsonl"))


def _batch_inputs(args, cfg, manifest):
    if args.augment:
        paths = [Path(p) for p in args.augment]
    else:
        paths = _batch_files(Path(cfg.out))
    for p in paths:
        manifest.add_input(p)
    return load_batches(paths)


def cmd_synth_corpus(args, cfg, manifest):
    corpus, table = synth_corpus(cfg)
    out = Path(cfg.out)
    manifest.add_artifact(write_corpus(corpus, out / "corpus.jsonl"))
    manifest.add_artifact(save_translation_table(table, out / "lexicon.json"))
    print(f"wrote {len(corpus)} documents to {out / 'corpus.jsonl'}")


def cmd_ingest(args, cfg, manifest):
    if not cfg.corpus:
        raise UsageError("ingest needs --corpus (or 'corpus' in the config file)")
    manifest.add_input(cfg.corpus)
    corpus = ingest(cfg.corpus, cfg.corpus_format)
    out = Path(cfg.out)
    manifest.add_artifact(write_corpus(corpus, out / "corpus.jsonl"))
    counts = {lab.name.lower(): len(corpus.with_label(lab)) for lab in Label}
    manifest.add_artifact(write_json(out / "ingest.json", {"documents": len(corpus), **counts}))
    print(f"ingested {len(corpus)} documents ({counts['positive']} Positive)")


def cmd_balance(args, cfg, manifest):
    out = Path(cfg.out)
    fmt = None
    if args.input:
        src = Path(args.input)
    elif (out / "corpus.jsonl").exists():
        src = out / "corpus.jsonl"
    elif cfg.corpus:
        src, fmt = Path(cfg.corpus), cfg.corpus_format
    else:
        raise UsageError("balance needs --input, <out>/corpus.jsonl, or a configured corpus")
    manifest.add_input(src)
    balanced = stage_balance(cfg, ingest(src, fmt))
    manifest.add_artifact(write_corpus(balanced, out / "balanced.jsonl"))
    print(f"balanced corpus: {len(balanced)} documents")


def _translation_table(cfg):
    if cfg.translation_table:
        return load_translation_table(cfg.translation_table)
    lex = Path(cfg.out) / "lexicon.json"
    return load_translation_table(lex) if lex.exists() else None


def cmd_augment(args, cfg, manifest):
    balanced = _balanced_input(args, cfg, manifest)
    providers = Providers(cfg, _translation_table(cfg) if "backtranslation" in cfg.methods else None)
    out = Path(cfg.out)
    try:
        for method in cfg.methods:
            try:
                batch = stage_augment(cfg, balanced, method, providers)
            except AugmentationError as exc:
                if exc.batch is not None and exc.batch.samples:
                    partial = exc.batch.save(out / "augment" / f"{method}.partial.jsonl")
                    manifest.add_artifact(partial)
                raise
            path = batch.save(batch_path(out, method))
            write_json(path.with_suffix(".summary.json"), batch.summary())
            manifest.add_artifact(path)
            print(f"{method}: {len(batch)} samples in {batch.attempts} attempts -> {path}")
    finally:
        providers.record(manifest)
    existing = load_batches(_batch_files(out))
    manifest.add_artifact(write_json(out / "composition.json",
                                     composition_to_json(full_composition(balanced, existing))))


def cmd_trainval(args, cfg, manifest):
    balanced = _balanced_input(args, cfg, manifest)
    batches = _batch_inputs(args, cfg, manifest)
    if not (Path(cfg.out) / "composition.json").exists():
        write_json(Path(cfg.out) / "composition.json",
                   composition_to_json(full_composition(balanced, batches)))
    report = stage_trainval(cfg, balanced, batches)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.json").write_text(report.dumps() + "\n", encoding="utf-8")
    (out / "performance.md").write_text(report.to_markdown(), encoding="utf-8")
    manifest.add_artifact(out / "eval.json")
    manifest.add_artifact(out / "performance.md")
    print(report.to_markdown(), end="")


def cmd_semsim(args, cfg, manifest):
    balanced = _balanced_input(args, cfg, manifest)
    batches = _batch_inputs(args, cfg, manifest)
    if not batches:
        raise FileNotFoundError("semsim needs at least one augmentation batch")
    providers = Providers(cfg)
    try:
        rows = stage_semsim(cfg, balanced, batches, providers)
    finally:
        providers.record(manifest)
    manifest.add_artifact(write_json(Path(cfg.out) / "similarity.json",
                                     [{"method": r.method, "similarity": r.similarity}
                                      for r in rows]))
    for r in rows:
        print(f"{r.method} | {r.similarity:.4f}")


def cmd_project(args, cfg, manifest):
    balanced = _balanced_input(args, cfg, manifest)
    batches = _batch_inputs(args, cfg, manifest)
    providers = Providers(cfg)
    out = Path(cfg.out)
    try:
        results = stage_project(cfg, balanced, batches, providers, out)
    finally:
        providers.record(manifest)
    manifest.add_artifact(write_projection_index(out, results))
    for name, r in results.items():
        manifest.add_artifact(r["svg"])
        manifest.add_artifact(r["csv"])
        print(f"{name}: KL {r['final_kl']:.4f} -> {r['svg']}")


def cmd_report(args, cfg, manifest):
    out = Path(cfg.out)
    stage_report(out)
    manifest.add_artifact(out / "report.md")
    manifest.add_artifact(out / "report.json")
    print(f"wrote {out / 'report.md'}")


def cmd_run_all(args, cfg, manifest):
    result = run_all(cfg)
    print(f"wrote {result['report_md']} (provider calls: {result['provider_calls']})")
    return False  # run_all writes its own manifest


COMMANDS = {
    "synth-corpus": cmd_synth_corpus, "ingest": cmd_ingest, "balance": cmd_balance,
    "augment": cmd_augment, "trainval": cmd_trainval, "semsim": cmd_semsim,
    "project": cmd_project, "report": cmd_report, "run-all": cmd_run_all,
}

_DATA_ERRORS = (CorpusError, AugmentationError, ValueError, KeyError, OSError,
                json.JSONDecodeError, RuntimeError)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, ProviderError):
        return EXIT_PROVIDER
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from(args)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        manifest = RunManifest.start(args.command, cfg)
        if COMMANDS[args.command](args, cfg, manifest) is not False:
            manifest.write(cfg.out)
    except (UsageError, ConfigError, StageError, ProviderError) + _DATA_ERRORS as exc:
        code = _exit_code(exc)
        print(f"augbench {args.command}: {exc}", file=sys.stderr)
        if code == EXIT_USAGE and isinstance(exc, UsageError):
            parser.print_usage(sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
