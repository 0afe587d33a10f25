from __future__ import annotations

import warnings
import numpy as np
import scipy.sparse as sp

from ..corpus import Label
from ..features import SparseVector, stack


class SingleClassWarning(UserWarning):
    """Training labels contain only one class."""


def as_matrix(X, dimension: int | None = None) -> sp.csr_matrix:
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    if isinstance(X, np.ndarray):
        return sp.csr_matrix(np.atleast_2d(X).astype(np.float64))
    X = list(X)
    if X and isinstance(X[0], SparseVector):
        return stack(X, dimension)
    return sp.csr_matrix(np.asarray(X, dtype=np.float64))


def as_labels(y) -> np.ndarray:
    return np.array([v.value if isinstance(v, Label) else int(v) for v in y], dtype=np.float64)


def to_labels(binary: np.ndarray) -> list[Label]:
    return [Label.POSITIVE if b else Label.NEGATIVE for b in binary]


def check_training(X: sp.csr_matrix, y: np.ndarray) -> None:
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if np.unique(y).shape[0] < 2:
        warnings.warn("training set contains a single class", SingleClassWarning, stacklevel=3)


class Classifier:
    """Shared predict plumbing; subclasses implement ``_proba`` and serialization."""

    kind: str
    n_features: int

    def _check_dim(self, X: sp.csr_matrix) -> None:
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"dimension mismatch: model has {self.n_features} features, input has {X.shape[1]}"
            )

    def predict_proba(self, X) -> np.ndarray:
        single = isinstance(X, SparseVector)
        M = as_matrix([X] if single else X, self.n_features)
        self._check_dim(M)
        p = self._proba(M)
        return p[0] if single else p

    def predict(self, X):
        p = self.predict_proba(X)
        if np.ndim(p) == 0:
            return Label.POSITIVE if p > 0.5 else Label.NEGATIVE
        return to_labels(np.asarray(p) > 0.5)

    def _proba(self, X: sp.csr_matrix) -> np.ndarray:
        raise NotImplementedError

