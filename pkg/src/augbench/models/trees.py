"""Sparse-aware decision trees: Gini random forest and second-order boosting.

Absent sparse entries count as 0. Split search runs in ``augbench._kernels``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .. import _kernels
from .base import Classifier, check_training


class SortedColumns:
    """CSC view of a training matrix with each column sorted by value."""

    def __init__(self, X: sp.csr_matrix):
        X = sp.csr_matrix(X, dtype=np.float64)
        X.eliminate_zeros()
        X.sort_indices()
        self.csr = X
        csc = X.tocsc()
        csc.eliminate_zeros()
        col = np.repeat(np.arange(csc.shape[1]), np.diff(csc.indptr))
        order = np.lexsort((csc.data, col))
        self.indptr = csc.indptr.astype(np.int64)
        self.rows = csc.indices[order].astype(np.int64)
        self.values = np.ascontiguousarray(csc.data[order], dtype=np.float64)
        self.n_rows, self.n_features = X.shape

    def present_features(self, rows: np.ndarray) -> np.ndarray:
        """Features with a nonzero entry in any of ``rows``, ascending."""
        ip = self.csr.indptr
        if rows.shape[0] == 0:
            return np.zeros(0, np.int64)
        lens = ip[rows + 1] - ip[rows]
        total = int(lens.sum())
        offsets = np.cumsum(lens) - lens
        pos = np.arange(total) - np.repeat(offsets, lens) + np.repeat(ip[rows], lens)
        return np.unique(self.csr.indices[pos]).astype(np.int64)

    def column(self, f: int, rows: np.ndarray) -> np.ndarray:
        """Dense values of feature ``f`` for ``rows``."""
        full = np.zeros(self.n_rows)
        lo, hi = self.indptr[f], self.indptr[f + 1]
        full[self.rows[lo:hi]] = self.values[lo:hi]
        return full[rows]


@dataclass
class Tree:
    """Array-encoded binary tree; leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X: sp.csr_matrix) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        Xc = X.tocsc() if n else X
        while active.shape[0]:
            feats = self.feature[node[active]]
            vals = np.asarray(Xc[active, feats]).ravel()
            go_left = vals <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_value(self, X: sp.csr_matrix) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], np.int64),
            np.asarray(d["threshold"], np.float64),
            np.asarray(d["left"], np.int64),
            np.asarray(d["right"], np.int64),
            np.asarray(d["value"], np.float64),
        )


class _TreeBuilder:
    """Depth-first builder; ``choose_split`` and ``leaf_value`` set the criterion."""

    def __init__(self, cols: SortedColumns, max_depth):
        self.cols = cols
        self.max_depth = max_depth
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self.leaf_rows: dict[int, np.ndarray] = {}

    def _new_node(self) -> int:
        for a in (self.feature, self.left, self.right):
            a.append(-1)
        self.threshold.append(0.0)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, rows: np.ndarray) -> Tree:
        root = self._new_node()
        stack = [(root, rows, 0)]
        while stack:
            node, node_rows, depth = stack.pop()
            split = None
            if self.max_depth is None or depth < self.max_depth:
                split = self.choose_split(node_rows)
            if split is None:
                self.value[node] = self.leaf_value(node_rows)
                self.leaf_rows[node] = node_rows
                continue
            f, thr = split
            go_left = self.cols.column(f, node_rows) <= thr
            lrows, rrows = node_rows[go_left], node_rows[~go_left]
            self.feature[node] = f
            self.threshold[node] = thr
            self.value[node] = self.leaf_value(node_rows)
            lnode, rnode = self._new_node(), self._new_node()
            self.left[node], self.right[node] = lnode, rnode
            # right pushed first so the left subtree is numbered first
            stack.append((rnode, rrows, depth + 1))
            stack.append((lnode, lrows, depth + 1))
        return Tree(
            np.asarray(self.feature, np.int64),
            np.asarray(self.threshold, np.float64),
            np.asarray(self.left, np.int64),
            np.asarray(self.right, np.int64),
            np.asarray(self.value, np.float64),
        )

    def choose_split(self, rows):
        raise NotImplementedError

    def leaf_value(self, rows) -> float:
        raise NotImplementedError


class _GiniBuilder(_TreeBuilder):
    def __init__(self, cols, y, counts, max_depth, min_samples_split, max_features, rng):
        super().__init__(cols, max_depth)
        self.y = y
        self.counts = counts
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.rng = rng
        self.node_weight = np.zeros(cols.n_rows)

    def leaf_value(self, rows):
        w = self.counts[rows]
        return float(np.sum(w * self.y[rows]) / np.sum(w))

    def choose_split(self, rows):
        w = self.counts[rows]
        total_w = float(w.sum())
        total_pos = float(np.sum(w * self.y[rows]))
        if total_w < self.min_samples_split or total_pos == 0.0 or total_pos == total_w:
            return None
        candidates = self.cols.present_features(rows)
        if candidates.shape[0] == 0:
            return None
        candidates = self.rng.permutation(candidates)
        self.node_weight[rows] = w
        try:
            # draw feature subsets until one admits a split
            for lo in range(0, candidates.shape[0], self.max_features):
                chunk = np.ascontiguousarray(candidates[lo:lo + self.max_features])
                f, thr, _ = _kernels.best_split_gini(
                    self.cols.indptr, self.cols.rows, self.cols.values, chunk,
                    self.node_weight, self.y, total_w, total_pos,
                )
                if f >= 0:
                    return int(f), float(thr)
            return None
        finally:
            self.node_weight[rows] = 0.0


class _NewtonBuilder(_TreeBuilder):
    def __init__(self, cols, grad, hess, max_depth, reg_lambda, gamma, min_child_weight):
        super().__init__(cols, max_depth)
        self.grad = grad
        self.hess = hess
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.min_child_weight = min_child_weight
        self.node_weight = np.zeros(cols.n_rows)

    def leaf_value(self, rows):
        return float(-self.grad[rows].sum() / (self.hess[rows].sum() + self.reg_lambda))

    def choose_split(self, rows):
        if rows.shape[0] < 2:
            return None
        candidates = self.cols.present_features(rows)
        if candidates.shape[0] == 0:
            return None
        self.node_weight[rows] = 1.0
        try:
            f, thr, gain = _kernels.best_split_newton(
                self.cols.indptr, self.cols.rows, self.cols.values, candidates,
                self.node_weight, self.grad, self.hess,
                float(rows.shape[0]), float(self.grad[rows].sum()), float(self.hess[rows].sum()),
                self.reg_lambda, self.min_child_weight,
            )
        finally:
            self.node_weight[rows] = 0.0
        if f < 0 or gain - self.gamma <= 0.0:
            return None
        return int(f), float(thr)


class RandomForest(Classifier):
    kind = "RandomForest"
    defaults = {"n_trees": 100, "max_depth": None, "min_samples_split": 2, "n_jobs": 1}

    def __init__(self, n_trees=100, max_depth=None, min_samples_split=2, n_jobs=1, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.n_jobs = n_jobs
        self.seed = seed
        self.trees: list[Tree] = []

    def fit(self, X: sp.csr_matrix, y: np.ndarray) -> "RandomForest":
        check_training(X, y)
        self.n_features = X.shape[1]
        cols = SortedColumns(X)
        n = X.shape[0]
        max_features = max(1, int(math.sqrt(self.n_features)))
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)

        def grow(ss):
            rng = np.random.default_rng(ss)
            counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
            builder = _GiniBuilder(
                cols, y, counts, self.max_depth, self.min_samples_split, max_features, rng
            )
            return builder.build(np.flatnonzero(counts))

        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.trees = list(pool.map(grow, seeds))
        else:
            self.trees = [grow(ss) for ss in seeds]
        return self

    def votes(self, X: sp.csr_matrix) -> np.ndarray:
        """Per-tree 0/1 votes, shape (n_trees, n_rows); leaf ties vote Negative."""
        return np.vstack([t.predict_value(X) > 0.5 for t in self.trees]).astype(np.float64)

    def _proba(self, X):
        return self.votes(X).mean(axis=0)

    def parameters(self) -> dict:
        return {"n_features": self.n_features, "trees": [t.to_json() for t in self.trees]}

    def load_parameters(self, p: dict) -> None:
        self.n_features = int(p["n_features"])
        self.trees = [Tree.from_json(t) for t in p["trees"]]


def logistic_loss(F: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


class GradientBoostedTrees(Classifier):
    kind = "GradientBoostedTrees"
    defaults = {
        "rounds": 100,
        "learning_rate": 0.3,
        "max_depth": 6,
        "lambda": 1.0,
        "gamma": 0.0,
        "min_child_weight": 1.0,
    }

    def __init__(self, rounds=100, learning_rate=0.3, max_depth=6, reg_lambda=1.0,
                 gamma=0.0, min_child_weight=1.0):
        self.rounds = rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.min_child_weight = min_child_weight
        self.trees: list[Tree] = []
        self.loss_history: list[float] = []

    def fit(self, X: sp.csr_matrix, y: np.ndarray) -> "GradientBoostedTrees":
        check_training(X, y)
        self.n_features = X.shape[1]
        prior = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6)
        self.base_score = math.log(prior / (1.0 - prior))
        cols = SortedColumns(X)
        F = np.full(X.shape[0], self.base_score)
        rows = np.arange(X.shape[0])
        self.trees = []
        self.loss_history = [logistic_loss(F, y)]
        for _ in range(self.rounds):
            p = expit(F)
            grad = p - y
            hess = p * (1.0 - p)
            builder = _NewtonBuilder(
                cols, grad, hess, self.max_depth, self.reg_lambda, self.gamma,
                self.min_child_weight,
            )
            tree = builder.build(rows)
            for leaf, leaf_rows in builder.leaf_rows.items():
                F[leaf_rows] += self.learning_rate * tree.value[leaf]
            self.trees.append(tree)
            self.loss_history.append(logistic_loss(F, y))
        return self

    def decision_function(self, X: sp.csr_matrix) -> np.ndarray:
        F = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            F += self.learning_rate * t.predict_value(X)
        return F

    def _proba(self, X):
        return expit(self.decision_function(X))

    def parameters(self) -> dict:
        return {
            "n_features": self.n_features,
            "base_score": self.base_score,
            "trees": [t.to_json() for t in self.trees],
        }

    def load_parameters(self, p: dict) -> None:
        self.n_features = int(p["n_features"])
        self.base_score = float(p["base_score"])
        self.trees = [Tree.from_json(t) for t in p["trees"]]
