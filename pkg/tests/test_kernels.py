import numpy as np
import pytest
import scipy.sparse as sp

from augbench import _kernels
from augbench._kernels import _fallback
from augbench.models.trees import SortedColumns

try:
    from augbench._kernels import _core
except ImportError:  # extension not built
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled kernels not built")


def _problem(seed, n=40, d=7, density=0.4):
    rng = np.random.default_rng(seed)
    X = sp.random(n, d, density=density, random_state=seed, format="csr",
                  data_rvs=lambda k: rng.integers(1, 5, size=k) / 4.0)
    cols = SortedColumns(X)
    weight = rng.integers(0, 3, size=n).astype(np.float64)
    y = (rng.random(n) < 0.4).astype(np.float64)
    feats = np.arange(d, dtype=np.int64)
    return X.toarray(), cols, weight, y, feats


def _candidates(x, w):
    vals = np.unique(x[w > 0])
    return (vals[:-1] + vals[1:]) / 2.0


def _gini_oracle(Xd, w, y):
    def imp(mask):
        tw = w[mask].sum()
        p = (w[mask] * y[mask]).sum() / tw
        return 1.0 - p * p - (1 - p) * (1 - p), tw

    g, tot = imp(np.ones_like(w, dtype=bool))
    best = -np.inf
    for f in range(Xd.shape[1]):
        for t in _candidates(Xd[:, f], w):
            left = (Xd[:, f] <= t) & (w > 0)
            right = (Xd[:, f] > t) & (w > 0)
            gl, wl = imp(left)
            gr, wr = imp(right)
            best = max(best, g - wl / tot * gl - wr / tot * gr)
    return best


def _newton_oracle(Xd, w, gr, hs, lam, mcw):
    act = w > 0
    G, H = gr[act].sum(), hs[act].sum()
    best = -np.inf
    for f in range(Xd.shape[1]):
        for t in _candidates(Xd[:, f], w):
            left = (Xd[:, f] <= t) & act
            right = (Xd[:, f] > t) & act
            lg, lh = gr[left].sum(), hs[left].sum()
            rg, rh = gr[right].sum(), hs[right].sum()
            if lh < mcw or rh < mcw:
                continue
            best = max(best, 0.5 * (lg * lg / (lh + lam) + rg * rg / (rh + lam) - G * G / (H + lam)))
    return best


def _gini(mod, cols, w, y, feats):
    return mod.best_split_gini(cols.indptr, cols.rows, cols.values, feats, w, y,
                               float(w.sum()), float((w * y).sum()))


def _newton(mod, cols, w, g, h, feats, lam=1.0, mcw=0.5):
    m = w > 0
    return mod.best_split_newton(cols.indptr, cols.rows, cols.values, feats, w, g, h,
                                 float(m.sum()), float(g[m].sum()), float(h[m].sum()), lam, mcw)


def test_backend_flag():
    assert _kernels.BACKEND in ("cython", "python")
    if _core is not None:
        assert _kernels.BACKEND == "cython" or _kernels.tsne_gradient is _fallback.tsne_gradient


@pytest.mark.parametrize("seed", range(15))
def test_fallback_gini_matches_brute_force(seed):
    Xd, cols, w, y, feats = _problem(seed)
    f, thr, score = _gini(_fallback, cols, w, y, feats)
    assert score == pytest.approx(_gini_oracle(Xd, w, y), abs=1e-12)
    assert thr in _candidates(Xd[:, f], w)


@pytest.mark.parametrize("seed", range(15))
def test_fallback_newton_matches_brute_force(seed):
    Xd, cols, w, y, feats = _problem(seed)
    rng = np.random.default_rng(seed + 100)
    p = rng.random(len(y))
    g, h = p - y, p * (1 - p)
    w = (w > 0).astype(np.float64)
    f, thr, score = _newton(_fallback, cols, w, g, h, feats, mcw=0.3)
    want = _newton_oracle(Xd, w, g, h, 1.0, 0.3)
    if np.isfinite(want):
        assert score == pytest.approx(want, abs=1e-12)
    else:
        assert f == -1


@needs_core
@pytest.mark.parametrize("seed", range(25))
def test_compiled_matches_fallback_splits(seed):
    Xd, cols, w, y, feats = _problem(seed, n=60, d=9)
    a = _gini(_core, cols, w, y, feats)
    b = _gini(_fallback, cols, w, y, feats)
    assert a[:2] == b[:2]
    assert a[2] == pytest.approx(b[2], abs=1e-12)
    rng = np.random.default_rng(seed)
    p = rng.random(len(y))
    g, h = p - y, p * (1 - p)
    w01 = (w > 0).astype(np.float64)
    a = _newton(_core, cols, w01, g, h, feats)
    b = _newton(_fallback, cols, w01, g, h, feats)
    assert a[:2] == b[:2]
    assert a[2] == pytest.approx(b[2], abs=1e-12)


@needs_core
def test_compiled_no_split_sentinel():
    Xd, cols, w, y, feats = _problem(0)
    w[:] = 0.0
    w[3] = 1.0
    assert _gini(_core, cols, w, y, feats)[0] == -1
    assert _gini(_fallback, cols, w, y, feats)[0] == -1


def _tsne_grad_oracle(Y, P, ex):
    n = Y.shape[0]
    num = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                num[i, j] = 1.0 / (1.0 + np.sum((Y[i] - Y[j]) ** 2))
    Q = num / num.sum()
    grad = np.zeros_like(Y)
    for i in range(n):
        for j in range(n):
            grad[i] += 4.0 * (ex * P[i, j] - Q[i, j]) * num[i, j] * (Y[i] - Y[j])
    return grad, num.sum()


@pytest.mark.parametrize("mod", [_fallback, pytest.param(_core, marks=needs_core)])
def test_tsne_gradient_oracle(mod):
    rng = np.random.default_rng(9)
    Y = rng.normal(size=(15, 2))
    A = rng.random((15, 15))
    P = A + A.T
    np.fill_diagonal(P, 0)
    P /= P.sum()
    for ex in (1.0, 12.0):
        grad, sq = mod.tsne_gradient(Y, P, ex)
        want, want_sq = _tsne_grad_oracle(Y, P, ex)
        np.testing.assert_allclose(grad, want, rtol=1e-10, atol=1e-14)
        assert sq == pytest.approx(want_sq, rel=1e-12)


def test_tsne_gradient_is_kl_derivative():
    """Central differences of KL(P || Q(Y)) reproduce the analytic gradient."""
    from augbench.analysis import kl_divergence, student_t_affinities

    rng = np.random.default_rng(3)
    Y = rng.normal(size=(8, 2))
    A = rng.random((8, 8))
    P = A + A.T
    np.fill_diagonal(P, 0)
    P /= P.sum()
    grad, _ = _kernels.tsne_gradient(Y, P, 1.0)
    eps = 1e-6
    for i in range(8):
        for k in range(2):
            Yp, Ym = Y.copy(), Y.copy()
            Yp[i, k] += eps
            Ym[i, k] -= eps
            fd = (kl_divergence(P, student_t_affinities(Yp))
                  - kl_divergence(P, student_t_affinities(Ym))) / (2 * eps)
            assert fd == pytest.approx(grad[i, k], rel=1e-5, abs=1e-8)
