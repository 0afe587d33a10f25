"""Pure numpy versions of the compiled kernels.

Same signatures and the same candidate ordering as ``_core.pyx``; results may
differ from the compiled path only in the last bits of accumulated sums.
"""

from __future__ import annotations

import numpy as np

_NO_SPLIT = (-1, 0.0, -1.0e300)
TIE_RTOL = 1e-9


def _merged_scan(indptr, rows, values, features, weight, stats, totals):
    """Merge each column's nonzero entries with its implicit-zero block.

    Returns (segment id, value, per-stat left sums, boundary mask) where the
    boundary mask marks positions k with a strictly larger successor in the
    same column.
    """
    features = np.asarray(features, dtype=np.int64)
    nfeat = features.shape[0]
    starts = indptr[features]
    lens = indptr[features + 1] - starts
    total = int(lens.sum())
    seg = np.repeat(np.arange(nfeat), lens)
    offsets = np.cumsum(lens) - lens
    pos = np.arange(total) - np.repeat(offsets, lens) + np.repeat(starts, lens)
    r = rows[pos]
    w = weight[r]
    keep = w != 0.0
    seg, r, w, v = seg[keep], r[keep], w[keep], values[pos][keep]

    cols = [w] + [w * s[r] for s in stats]
    nz = [np.bincount(seg, weights=c, minlength=nfeat) for c in cols]
    zero = [t - s for t, s in zip(totals, nz)]
    has_zero = zero[0] >= 0.5
    zseg = np.flatnonzero(has_zero)

    seg_all = np.concatenate([seg, zseg])
    val_all = np.concatenate([v, np.zeros(zseg.shape[0])])
    cols_all = [np.concatenate([c, z[zseg]]) for c, z in zip(cols, zero)]
    order = np.lexsort((val_all, seg_all))
    seg_all = seg_all[order]
    val_all = val_all[order]
    cols_all = [c[order] for c in cols_all]

    m = seg_all.shape[0]
    if m == 0:
        return None
    seg_start = np.ones(m, dtype=bool)
    seg_start[1:] = seg_all[1:] != seg_all[:-1]
    start_idx = np.maximum.accumulate(np.where(seg_start, np.arange(m), 0))
    lefts = []
    for c in cols_all:
        cs = np.cumsum(c)
        before = np.where(start_idx > 0, cs[start_idx - 1], 0.0)
        lefts.append(cs - before)
    boundary = np.zeros(m, dtype=bool)
    boundary[:-1] = (seg_all[1:] == seg_all[:-1]) & (val_all[1:] > val_all[:-1])
    thr = np.zeros(m)
    thr[:-1] = (val_all[:-1] + val_all[1:]) / 2.0
    return seg_all, thr, lefts, boundary


def _pick(features, seg, thr, score, valid):
    if not valid.any():
        return _NO_SPLIT
    idx = np.flatnonzero(valid)
    s = score[idx]
    best = s.max()
    cutoff = best - TIE_RTOL * max(1.0, abs(best))
    k = idx[int(np.argmax(s >= cutoff))]
    return int(features[seg[k]]), float(thr[k]), float(score[k])


def best_split_gini(indptr, rows, values, features, weight, ypos, total_w, total_pos):
    res = _merged_scan(indptr, rows, values, features, weight, [ypos], [total_w, total_pos])
    if res is None:
        return _NO_SPLIT
    seg, thr, (lw, lp), boundary = res
    rw = total_w - lw
    rp = total_pos - lp
    valid = boundary & (lw > 0.0) & (rw > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gl = 1.0 - (lp / lw) ** 2 - ((lw - lp) / lw) ** 2
        gr = 1.0 - (rp / rw) ** 2 - ((rw - rp) / rw) ** 2
        g = 1.0 - (total_pos / total_w) ** 2 - ((total_w - total_pos) / total_w) ** 2
        score = g - (lw / total_w) * gl - (rw / total_w) * gr
    return _pick(np.asarray(features), seg, thr, score, valid)


def best_split_newton(
    indptr, rows, values, features, weight, grad, hess,
    total_w, total_g, total_h, reg_lambda, min_child_weight,
):
    res = _merged_scan(
        indptr, rows, values, features, weight, [grad, hess], [total_w, total_g, total_h]
    )
    if res is None:
        return _NO_SPLIT
    seg, thr, (lw, lg, lh), boundary = res
    rh = total_h - lh
    rg = total_g - lg
    valid = (
        boundary & (lw > 0.0) & (total_w - lw > 0.0)
        & (lh >= min_child_weight) & (rh >= min_child_weight)
    )
    score = 0.5 * (
        lg * lg / (lh + reg_lambda)
        + rg * rg / (rh + reg_lambda)
        - total_g * total_g / (total_h + reg_lambda)
    )
    return _pick(np.asarray(features), seg, thr, score, valid)


def tsne_gradient(Y, P, exaggeration):
    diff = Y[:, None, :] - Y[None, :, :]
    num = 1.0 / (1.0 + np.sum(diff * diff, axis=-1))
    np.fill_diagonal(num, 0.0)
    sum_q = num.sum()
    mult = (exaggeration * P - num / sum_q) * num
    grad = 4.0 * np.einsum("ij,ijk->ik", mult, diff)
    return grad, sum_q
