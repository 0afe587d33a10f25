"""Logistic regression (full-batch gradient descent) and multinomial naive Bayes."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logsumexp

from .base import Classifier, check_training


def logistic_loss_and_grad(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * ||w||^2``, with its gradient in (w, b)."""
    z = X @ w + b
    # log(1 + e^z) - y z, stable in both tails
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * float(w @ w)
    r = expit(z) - y
    n = y.shape[0]
    gw = np.asarray(X.T @ r).ravel() / n + l2 * w
    gb = float(r.sum()) / n
    return float(loss), gw, gb


class LogisticRegression(Classifier):
    kind = "LogReg"
    defaults = {"learning_rate": 0.1, "epochs": 500, "l2": 1e-4, "tol": 1e-6}

    def __init__(self, learning_rate=0.1, epochs=500, l2=1e-4, tol=1e-6):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.tol = tol
        self.weights: np.ndarray | None = None
        self.bias = 0.0
        self.loss_history: list[float] = []

    def fit(self, X: sp.csr_matrix, y: np.ndarray) -> "LogisticRegression":
        check_training(X, y)
        self.n_features = X.shape[1]
        w = np.zeros(self.n_features)
        b = 0.0
        lr = self.learning_rate
        loss, gw, gb = logistic_loss_and_grad(w, b, X, y, self.l2)
        history = [loss]
        for _ in range(self.epochs):
            # an epoch that raises the loss is rejected and retried at half the step
            while True:
                w_new = w - lr * gw
                b_new = b - lr * gb
                new_loss, new_gw, new_gb = logistic_loss_and_grad(w_new, b_new, X, y, self.l2)
                if new_loss <= loss or lr < 1e-12:
                    break
                lr /= 2.0
            improvement = loss - new_loss
            w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
            history.append(loss)
            if improvement < self.tol:
                break
        self.weights, self.bias, self.loss_history = w, b, history
        return self

    def decision_function(self, X: sp.csr_matrix) -> np.ndarray:
        return X @ self.weights + self.bias

    def _proba(self, X):
        return expit(self.decision_function(X))

    def parameters(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "n_features": self.n_features}

    def load_parameters(self, p: dict) -> None:
        self.weights = np.asarray(p["weights"], dtype=np.float64)
        self.bias = float(p["bias"])
        self.n_features = int(p["n_features"])


class MultinomialNaiveBayes(Classifier):
    """Fractional TF-IDF mass is treated as term counts, smoothed by ``alpha``."""

    kind = "NaiveBayes"
    defaults = {"alpha": 1.0}

    def __init__(self, alpha=1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha

    def fit(self, X: sp.csr_matrix, y: np.ndarray) -> "MultinomialNaiveBayes":
        check_training(X, y)
        if X.nnz and X.data.min() < 0:
            raise ValueError("naive Bayes needs non-negative features")
        self.n_features = X.shape[1]
        n = y.shape[0]
        counts = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=np.float64)
        with np.errstate(divide="ignore"):
            self.class_log_prior = np.log(counts / n)
        mass = np.vstack([
            np.asarray(X[y == c].sum(axis=0)).ravel() for c in (0, 1)
        ])
        smoothed = mass + self.alpha
        self.feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        return self

    def joint_log_likelihood(self, X: sp.csr_matrix) -> np.ndarray:
        return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior

    def _proba(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

    def parameters(self) -> dict:
        return {
            "class_log_prior": [float(v) if np.isfinite(v) else None for v in self.class_log_prior],
            "feature_log_prob": self.feature_log_prob.tolist(),
            "n_features": self.n_features,
        }

    def load_parameters(self, p: dict) -> None:
        self.class_log_prior = np.array(
            [-np.inf if v is None else v for v in p["class_log_prior"]], dtype=np.float64
        )
        self.feature_log_prob = np.asarray(p["feature_log_prob"], dtype=np.float64)
        self.n_features = int(p["n_features"])
