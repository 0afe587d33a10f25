"""The four classifiers behind one contract: ``fit``, ``predict``, ``predict_proba``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .base import Classifier, SingleClassWarning, as_labels, as_matrix
from .linear import LogisticRegression, MultinomialNaiveBayes, logistic_loss_and_grad
from .trees import GradientBoostedTrees, RandomForest, SortedColumns, Tree


class ClassifierKind(Enum):
    LOGREG = "LogReg"
    NAIVE_BAYES = "NaiveBayes"
    RANDOM_FOREST = "RandomForest"
    GBT = "GradientBoostedTrees"

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, value) -> "ClassifierKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "").replace(" ", "")
        for kind in cls:
            names = {kind.value.lower(), kind.name.lower().replace("_", ""), _DISPLAY[kind].lower().replace(" ", "")}
            if key in names or key in _ALIASES.get(kind, ()):
                return kind
        raise ValueError(f"unknown classifier kind {value!r}")


_DISPLAY = {
    ClassifierKind.LOGREG: "Logistic Regression",
    ClassifierKind.NAIVE_BAYES: "Naive Bayes",
    ClassifierKind.RANDOM_FOREST: "Random Forest",
    ClassifierKind.GBT: "XGBoost",
}
_ALIASES = {
    ClassifierKind.LOGREG: ("lr", "logistic"),
    ClassifierKind.NAIVE_BAYES: ("nb",),
    ClassifierKind.RANDOM_FOREST: ("rf", "forest"),
    ClassifierKind.GBT: ("gbt", "xgb", "boosting"),
}
_CLASSES = {
    ClassifierKind.LOGREG: LogisticRegression,
    ClassifierKind.NAIVE_BAYES: MultinomialNaiveBayes,
    ClassifierKind.RANDOM_FOREST: RandomForest,
    ClassifierKind.GBT: GradientBoostedTrees,
}


def _validate(kind: ClassifierKind, hp: dict) -> dict:
    defaults = _CLASSES[kind].defaults
    unknown = set(hp) - set(defaults)
    if unknown:
        raise ValueError(f"unknown hyperparameters for {kind.value}: {sorted(unknown)}")
    merged = {**defaults, **hp}
    for key in ("epochs", "n_trees", "rounds", "min_samples_split", "n_jobs"):
        if key in merged and (not isinstance(merged[key], int) or merged[key] < 0):
            raise ValueError(f"{key} must be a non-negative integer")
    for key in ("learning_rate", "alpha"):
        if key in merged and not merged[key] > 0:
            raise ValueError(f"{key} must be positive")
    for key in ("l2", "tol", "lambda", "gamma", "min_child_weight"):
        if key in merged and merged[key] < 0:
            raise ValueError(f"{key} must be non-negative")
    depth = merged.get("max_depth")
    if depth is not None and (not isinstance(depth, int) or depth < 0):
        raise ValueError("max_depth must be a non-negative integer or None")
    return merged


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = ClassifierKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparams", _validate(kind, dict(self.hyperparams)))

    def build(self) -> Classifier:
        hp = dict(self.hyperparams)
        if self.kind is ClassifierKind.RANDOM_FOREST:
            return RandomForest(seed=self.seed, **hp)
        if self.kind is ClassifierKind.GBT:
            hp["reg_lambda"] = hp.pop("lambda")
            return GradientBoostedTrees(**hp)
        return _CLASSES[self.kind](**hp)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "hyperparams": self.hyperparams, "seed": self.seed}


def fit(spec: ClassifierSpec, X, y) -> Classifier:
    """Fit the classifier described by ``spec``; deterministic given ``spec.seed``."""
    model = spec.build()
    model.fit(as_matrix(X), as_labels(y))
    model.spec = spec
    return model


def predict(model: Classifier, x):
    return model.predict(x)


def predict_proba(model: Classifier, x):
    return model.predict_proba(x)


def dumps(model: Classifier) -> str:
    spec = model.spec
    return json.dumps(
        {"kind": spec.kind.value, "hyperparams": spec.hyperparams, "seed": spec.seed,
         "parameters": model.parameters()},
        sort_keys=True,
    )


def loads(text: str) -> Classifier:
    data = json.loads(text)
    spec = ClassifierSpec(ClassifierKind(data["kind"]), data["hyperparams"], data["seed"])
    model = spec.build()
    model.load_parameters(data["parameters"])
    model.spec = spec
    return model


__all__ = [
    "Classifier", "ClassifierKind", "ClassifierSpec", "GradientBoostedTrees",
    "LogisticRegression", "MultinomialNaiveBayes", "RandomForest", "SingleClassWarning",
    "SortedColumns", "Tree", "dumps", "fit", "loads", "logistic_loss_and_grad",
    "predict", "predict_proba",
]
