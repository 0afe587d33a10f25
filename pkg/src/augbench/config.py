"""Pipeline configuration: dataclass defaults, overridden by a TOML file, overridden by flags."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .eval import CVMode
from .models import ClassifierKind

METHODS = ("backtranslation", "single", "dual")
PROVIDERS = ("mock", "http")
CACHE_MODES = ("readwrite", "replay", "record")
PROJECTION_INPUTS = ("auto", "embeddings", "tfidf")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    out: str = "augbench-out"
    # corpus
    corpus: str | None = None
    corpus_format: str | None = None
    synth_seed: int = 0
    n_negative: int = 2000
    n_positive: int = 100
    translation_table: str | None = None
    # balancing
    balance_ratio: float = 2.0
    balance_seed: int = 0
    # augmentation
    methods: tuple[str, ...] = METHODS
    target: int | None = None
    seed: int = 0
    provider: str = "mock"
    chat_endpoint: str = "https://api.openai.com/v1/chat/completions"
    translate_endpoint: str | None = None
    embed_endpoint: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.25
    top_p: float = 0.4
    max_tokens: int = 256
    model_name: str = "gpt-3.5-turbo"
    source_lang: str = "id"
    pivot_lang: str = "en"
    cache_dir: str | None = None
    cache_mode: str = "readwrite"
    # evaluation
    models: tuple[str, ...] = ("LogReg", "NaiveBayes", "RandomForest", "GradientBoostedTrees")
    k: int = 5
    cv_seed: int = 0
    cv_mode: str = CVMode.HOLDOUT_ORIGINAL.value
    # similarity and projection
    embeddings: str | None = None
    embed_dimension: int = 64
    projection_input: str = "auto"
    perplexity: float = 30.0
    tsne_iterations: int = 1000
    tsne_seed: int = 0

    def validate(self) -> "PipelineConfig":
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be drawn from {METHODS}, got {list(self.methods)}")
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}")
        if self.cache_mode not in CACHE_MODES:
            raise ConfigError(f"cache_mode must be one of {CACHE_MODES}")
        if self.projection_input not in PROJECTION_INPUTS:
            raise ConfigError(f"projection_input must be one of {PROJECTION_INPUTS}")
        try:
            CVMode(self.cv_mode)
            for m in self.models:
                ClassifierKind.parse(m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.balance_ratio < 1:
            raise ConfigError("balance_ratio must be at least 1")
        if self.target is not None and self.target < 0:
            raise ConfigError("target must be non-negative")
        if self.n_negative < 1 or self.n_positive < 1:
            raise ConfigError("synthetic class sizes must be positive")
        if self.embed_dimension < 1 or self.perplexity <= 0 or self.tsne_iterations < 1:
            raise ConfigError("embed_dimension, perplexity and tsne_iterations must be positive")
        return self

    @property
    def cache_path(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else Path(self.out) / "cache"

    def to_json(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["models"] = list(self.models)
        return d


_FIELDS = {f.name: f for f in fields(PipelineConfig)}
_LISTS = {"methods", "models"}


def _coerce(name: str, value):
    if name in _LISTS:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        return tuple(str(v) for v in value)
    default = _FIELDS[name].default
    if value is None:
        return None
    kind = type(default) if default is not None else str
    if kind is bool or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{name}: unexpected boolean")
    try:
        if kind is float:
            return float(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r} as {kind.__name__}") from None


_INT_OR_NONE = {"target"}


def merge(base: PipelineConfig, values: dict, origin: str) -> PipelineConfig:
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"{origin}: unknown keys {unknown}")
    updates = {}
    for k, v in values.items():
        if k in _INT_OR_NONE:
            updates[k] = None if v is None else _coerce_int(k, v)
        else:
            updates[k] = _coerce(k, v)
    return replace(base, **updates)


def _coerce_int(name, v):
    try:
        if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
            raise ValueError
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected an integer, got {v!r}") from None


def load_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config is flat; unexpected tables {nested}")
    return data


def build(config_path=None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the file, then explicit overrides (``None`` values ignored)."""
    cfg = PipelineConfig()
    if config_path is not None:
        cfg = merge(cfg, load_file(config_path), str(config_path))
    if overrides:
        cfg = merge(cfg, {k: v for k, v in overrides.items() if v is not None}, "flags")
    return cfg.validate()


__all__ = ["ConfigError", "PipelineConfig", "build", "load_file", "merge"]
