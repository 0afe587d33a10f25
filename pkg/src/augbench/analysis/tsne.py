"""Exact t-SNE (O(n^2) per iteration) and a power-iteration PCA for sparse input."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import _kernels

logger = logging.getLogger(__name__)

Q_FLOOR = 1e-12


class TsneError(RuntimeError):
    pass


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    init_std: float = 1e-4
    min_gain: float = 0.01
    log_every: int = 50

    def __post_init__(self):
        if self.perplexity <= 0 or self.learning_rate <= 0 or self.iterations <= 0:
            raise ValueError("perplexity, learning_rate and iterations must be positive")
        if self.early_exaggeration <= 0 or self.init_std <= 0:
            raise ValueError("early_exaggeration and init_std must be positive")


@dataclass
class Projection2D:
    coords: np.ndarray
    ids: list[str]
    tags: list[tuple[str, str]]  # (source, label) per row
    final_kl: float
    kl_history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def initial_kl(self) -> float:
        """KL at the first logged iteration after early exaggeration ends."""
        return self.kl_history[0][1]


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def _row_entropy_bits(d: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    shifted = d - d.min()
    w = np.exp(-shifted * beta)
    s = w.sum()
    p = w / s
    # H = log s + beta * E[shifted], converted to bits
    h = (math.log(s) + beta * float(np.dot(p, shifted))) / math.log(2.0)
    return h, p


def conditional_affinities(X, perplexity: float, tol: float = 1e-5, max_iter: int = 64):
    """Row-stochastic p_{j|i} with each row's entropy (bits) = log2(perplexity).

    Returns (P_conditional, entropies, betas).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 3 * perplexity < n:
        raise TsneError(f"need 3 * perplexity < n (perplexity={perplexity}, n={n})")
    D = _squared_distances(X)
    if not np.any(D > 0):
        raise TsneError("degenerate input: all points are identical")
    target = math.log2(perplexity)
    P = np.zeros((n, n))
    entropies = np.zeros(n)
    betas = np.zeros(n)
    for i in range(n):
        d = np.delete(D[i], i)
        scale = np.median(d[d > 0]) if np.any(d > 0) else 1.0
        beta, lo, hi = 1.0 / scale, 0.0, math.inf
        h, p = _row_entropy_bits(d, beta)
        for _ in range(max_iter):
            diff = h - target
            if abs(diff) < tol:
                break
            if diff > 0:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == math.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (beta + lo) / 2.0
            h, p = _row_entropy_bits(d, beta)
        P[i, np.arange(n) != i] = p
        entropies[i] = h
        betas[i] = beta
    return P, entropies, betas


def pairwise_affinities(X, perplexity: float = 30.0) -> np.ndarray:
    """Symmetric joint affinities p_ij = (p_{j|i} + p_{i|j}) / 2n."""
    Pc, _, _ = conditional_affinities(X, perplexity)
    n = Pc.shape[0]
    return (Pc + Pc.T) / (2.0 * n)


def student_t_affinities(Y: np.ndarray) -> np.ndarray:
    num = 1.0 / (1.0 + _squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum()


def kl_divergence(P, Q) -> float:
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Q.shape}")
    mask = P > 0
    q = Q[mask]
    # floor only vanished entries; clipping small positive q would bias KL(P, P) below zero
    q = np.where(q > 0, q, Q_FLOOR)
    return float(np.sum(P[mask] * np.log(P[mask] / q)))


def tsne(X, config: TsneConfig | None = None, seed: int = 0, ids=None, tags=None) -> Projection2D:
    """Gradient descent on KL(P || Q) with momentum, gains and early exaggeration."""
    config = config or TsneConfig()
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    P = pairwise_affinities(X, config.perplexity)
    P = np.maximum(P, 0.0)
    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, config.init_std, size=(n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    history: list[tuple[int, float]] = []

    for it in range(config.iterations):
        exaggeration = config.early_exaggeration if it < config.exaggeration_iters else 1.0
        momentum = config.momentum if it < config.momentum_switch else config.final_momentum
        grad, _ = _kernels.tsne_gradient(np.ascontiguousarray(Y), P, exaggeration)
        if not np.all(np.isfinite(grad)):
            raise TsneError(f"non-finite gradient at iteration {it}")
        same_sign = (grad > 0) == (update > 0)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, config.min_gain, out=gains)
        update = momentum * update - config.learning_rate * gains * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
        done = it + 1
        if done >= config.exaggeration_iters and (
            done == config.exaggeration_iters or done % config.log_every == 0
            or done == config.iterations
        ):
            kl = kl_divergence(P, student_t_affinities(Y))
            if history and history[-1][0] == done:
                continue
            history.append((done, kl))
            logger.debug("t-SNE iteration %d: KL %.5f", done, kl)
    if not history:
        history.append((config.iterations, kl_divergence(P, student_t_affinities(Y))))
    ids = list(ids) if ids is not None else [str(i) for i in range(n)]
    tags = list(tags) if tags is not None else [("original", "0")] * n
    return Projection2D(Y, ids, tags, history[-1][1], history)


def pca_power_iteration(X, n_components: int = 50, iterations: int = 200, seed: int = 0,
                        tol: float = 1e-10):
    """Top principal directions of the column-centred ``X`` by orthogonal iteration.

    Returns (scores n x k, components k x d, column means).
    """
    dense = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    mean = dense.mean(axis=0)
    Xc = dense - mean
    n, d = Xc.shape
    k = min(n_components, n, d)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(d, k)))
    for _ in range(iterations):
        Z = Xc.T @ (Xc @ Q)
        Q_new, R = np.linalg.qr(Z)
        # fix column signs so iterations are comparable
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        Q_new = Q_new * signs
        delta = np.max(np.abs(np.abs(Q_new.T @ Q) - np.eye(k))) if k else 0.0
        Q = Q_new
        if delta < tol:
            break
    # order directions by captured variance
    var = np.sum((Xc @ Q) ** 2, axis=0)
    order = np.argsort(-var, kind="stable")
    components = Q[:, order].T
    return Xc @ components.T, components, mean
