"""Stratified k-fold cross-validation, accuracy/F1 metrics and the accuracy-F1 gap."""

from __future__ import annotations

import json
import logging
import random
import statistics
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import features as feat
from .corpus import Corpus, Label, Source
from .models import ClassifierSpec, fit

logger = logging.getLogger(__name__)

GAP_FLAG_THRESHOLD = 0.05

CONFIG_NAMES = {
    None: "Original",
    Source.ORIGINAL: "Original",
    Source.BACKTRANSLATION: "Backtranslated",
    Source.SINGLE_CLASS_GEN: "Single-class prompt generation",
    Source.DUAL_CLASS_GEN: "Dual-class prompt generation",
}


class CVMode(Enum):
    HOLDOUT_ORIGINAL = "holdout_original"
    MIXED = "mixed"


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: dict[str, int]
    k: int

    def test_ids(self, fold: int) -> list[str]:
        return [i for i, f in self.fold_of.items() if f == fold]


def stratified_kfold(labels: Sequence[Label], k: int, seed: int = 0,
                     ids: Sequence[str] | None = None) -> FoldAssignment:
    """Seeded shuffle inside each label, then round-robin over folds."""
    n = len(labels)
    if k < 2:
        raise EvalError("k must be at least 2")
    if k > n:
        raise EvalError(f"k={k} exceeds the number of samples ({n})")
    ids = list(ids) if ids is not None else [str(i) for i in range(n)]
    rng = random.Random(seed)
    fold_of: dict[str, int] = {}
    for label in sorted(set(labels), key=lambda lab: lab.value):
        members = [ids[i] for i in range(n) if labels[i] is label]
        if len(members) < k:
            warnings.warn(f"label {label.name} has {len(members)} members, fewer than k={k}")
        rng.shuffle(members)
        for j, doc_id in enumerate(members):
            fold_of[doc_id] = j % k
    return FoldAssignment({i: fold_of[i] for i in ids}, k)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1_positive: float
    f1_macro: float
    confusion: dict[str, int]  # keys tp, fp, fn, tn


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def compute_metrics(predictions: Sequence[Label], truth: Sequence[Label]) -> Metrics:
    if len(predictions) != len(truth):
        raise EvalError(f"length mismatch: {len(predictions)} predictions, {len(truth)} labels")
    if not truth:
        raise EvalError("cannot score an empty prediction list")
    pos, neg = Label.POSITIVE, Label.NEGATIVE
    tp = sum(p is pos and t is pos for p, t in zip(predictions, truth))
    fp = sum(p is pos and t is neg for p, t in zip(predictions, truth))
    fn = sum(p is neg and t is pos for p, t in zip(predictions, truth))
    tn = len(truth) - tp - fp - fn
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    return Metrics(
        accuracy=(tp + tn) / len(truth),
        f1_positive=f1_pos,
        f1_macro=(f1_pos + f1_neg) / 2,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    )


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


@dataclass
class EvalEntry:
    """Cross-validation outcome for one (dataset config, model) cell."""

    config: str
    model: str
    cv_mode: str
    folds: list[Metrics] = field(default_factory=list)

    def _summary(self, attr: str) -> tuple[float, float]:
        return _mean_std([getattr(m, attr) for m in self.folds])

    @property
    def accuracy(self) -> tuple[float, float]:
        return self._summary("accuracy")

    @property
    def f1_macro(self) -> tuple[float, float]:
        return self._summary("f1_macro")

    @property
    def f1_positive(self) -> tuple[float, float]:
        return self._summary("f1_positive")

    def to_json(self) -> dict:
        acc, acc_sd = self.accuracy
        f1, f1_sd = self.f1_macro
        f1p, f1p_sd = self.f1_positive
        return {
            "config": self.config,
            "model": self.model,
            "cv_mode": self.cv_mode,
            "accuracy_mean": acc,
            "accuracy_std": acc_sd,
            "f1_macro_mean": f1,
            "f1_macro_std": f1_sd,
            "f1_positive_mean": f1p,
            "f1_positive_std": f1p_sd,
            "folds": [asdict(m) for m in self.folds],
        }

    @classmethod
    def from_json(cls, d: dict) -> "EvalEntry":
        return cls(d["config"], d["model"], d["cv_mode"], [Metrics(**m) for m in d["folds"]])


@dataclass
class EvalReport:
    entries: list[EvalEntry] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "EvalReport":
        return cls([EvalEntry.from_json(e) for e in d["entries"]])

    def lookup(self, config: str, model: str) -> EvalEntry:
        for e in self.entries:
            if e.config == config and e.model == model:
                return e
        raise KeyError((config, model))

    def to_markdown(self) -> str:
        return render_performance_table(self)


def render_performance_table(report: EvalReport) -> str:
    lines = [
        "| Dataset | Model | Accuracy | Accuracy Std | F1-Score | F1-Score Std |",
        "|---|---|---|---|---|---|",
    ]
    previous = None
    for e in report.entries:
        acc, acc_sd = e.accuracy
        f1, f1_sd = e.f1_macro
        dataset = e.config if e.config != previous else ""
        previous = e.config
        lines.append(
            f"| {dataset} | {e.model} | {acc:.3f} | {acc_sd:.3f} | {f1:.3f} | {f1_sd:.3f} |"
        )
    return "\n".join(lines) + "\n"


def _texts_and_labels(docs):
    return [feat.tokenize(d.normalized()) for d in docs], [d.label for d in docs]


def cross_validate(
    original: Corpus,
    augmentation=None,
    spec: ClassifierSpec | None = None,
    k: int = 5,
    seed: int = 0,
    cv_mode: CVMode | str = CVMode.HOLDOUT_ORIGINAL,
    tfidf_config: feat.TfidfConfig | None = None,
) -> EvalEntry:
    """k-fold CV of one classifier on ``original`` (+ optional augmentation batch).

    In holdout_original mode folds come from the original documents only and
    every augmented sample is added to each training split. In mixed mode the
    folds are drawn over the union.
    """
    cv_mode = CVMode(cv_mode)
    spec = spec or ClassifierSpec("LogReg")
    aug_docs = list(augmentation.samples) if augmentation is not None else []
    aug_source = aug_docs[0].source if aug_docs else None
    orig_docs = list(original.documents)
    aug_ids = {d.id for d in aug_docs}

    if cv_mode is CVMode.HOLDOUT_ORIGINAL:
        pool = orig_docs
        always_train = aug_docs
    else:
        pool = orig_docs + aug_docs
        always_train = []
    folds = stratified_kfold([d.label for d in pool], k, seed, ids=[d.id for d in pool])

    entry = EvalEntry(CONFIG_NAMES[aug_source], spec.kind.display, cv_mode.value)
    for fold in range(k):
        test = [d for d in pool if folds.fold_of[d.id] == fold]
        train = [d for d in pool if folds.fold_of[d.id] != fold] + always_train
        if not test or not train:
            raise EvalError(f"fold {fold} is empty")
        if cv_mode is CVMode.HOLDOUT_ORIGINAL:
            leaked = aug_ids & {d.id for d in test}
            assert not leaked, f"augmented samples in test fold {fold}: {sorted(leaked)[:3]}"
        train_tokens, train_y = _texts_and_labels(train)
        test_tokens, test_y = _texts_and_labels(test)
        tfidf = feat.fit(train_tokens, tfidf_config)
        model = fit(spec, tfidf.transform_many(train_tokens), train_y)
        preds = model.predict(tfidf.transform_many(test_tokens))
        entry.folds.append(compute_metrics(preds, test_y))
        logger.debug("%s/%s fold %d: %s", entry.config, entry.model, fold, entry.folds[-1])
    return entry


@dataclass(frozen=True)
class GapRow:
    config: str
    model: str
    accuracy: float
    f1: float
    gap: float
    flagged: bool


def gap_analysis(report: EvalReport, threshold: float = GAP_FLAG_THRESHOLD) -> list[GapRow]:
    """Accuracy minus macro-F1 per cell; gaps above ``threshold`` are flagged."""
    if not report.entries:
        raise EvalError("empty report")
    rows = []
    for e in report.entries:
        acc, f1 = e.accuracy[0], e.f1_macro[0]
        gap = acc - f1
        rows.append(GapRow(e.config, e.model, acc, f1, gap, gap > threshold))
    return rows


def gap_from_values(accuracy: float, f1: float, threshold: float = GAP_FLAG_THRESHOLD):
    gap = accuracy - f1
    return gap, gap > threshold


def fold_label_counts(assignment: FoldAssignment, labels: dict[str, Label]) -> np.ndarray:
    """(k, 2) array of per-fold counts, columns ordered Negative, Positive."""
    out = np.zeros((assignment.k, 2), dtype=np.int64)
    for doc_id, fold in assignment.fold_of.items():
        out[fold, labels[doc_id].value] += 1
    return out
