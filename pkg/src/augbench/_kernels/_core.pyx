# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled split search and t-SNE gradient.

Both split searchers walk a CSC matrix whose columns are sorted ascending by
value. Rows absent from a column hold an implicit zero; those rows form one
block placed at value 0 in the merged order.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef double TIE_RTOL = 1e-9


cdef Py_ssize_t _capacity(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] features):
    cdef Py_ssize_t fi, cap = 0
    for fi in range(features.shape[0]):
        cap += indptr[features[fi] + 1] - indptr[features[fi]] + 1
    return cap


cdef inline Py_ssize_t _push(double[::1] cs, cnp.int64_t[::1] cf, double[::1] ct,
                             Py_ssize_t n, double score, cnp.int64_t f, double thr) nogil:
    cs[n] = score
    cf[n] = f
    ct[n] = thr
    return n + 1


cdef tuple _select(double[::1] cs, cnp.int64_t[::1] cf, double[::1] ct, Py_ssize_t n):
    """First candidate within a relative tolerance of the best score."""
    cdef Py_ssize_t k
    cdef double best = -1.0e300, cutoff
    if n == 0:
        return (-1, 0.0, -1.0e300)
    for k in range(n):
        if cs[k] > best:
            best = cs[k]
    cutoff = best - TIE_RTOL * (1.0 if fabs(best) < 1.0 else fabs(best))
    for k in range(n):
        if cs[k] >= cutoff:
            return (int(cf[k]), ct[k], cs[k])


cdef inline double _gini_score(double w, double p, double lw, double lp) nogil:
    cdef double rw = w - lw
    cdef double rp = p - lp
    cdef double gl = 1.0 - (lp / lw) * (lp / lw) - ((lw - lp) / lw) * ((lw - lp) / lw)
    cdef double gr = 1.0 - (rp / rw) * (rp / rw) - ((rw - rp) / rw) * ((rw - rp) / rw)
    cdef double g = 1.0 - (p / w) * (p / w) - ((w - p) / w) * ((w - p) / w)
    return g - (lw / w) * gl - (rw / w) * gr


def best_split_gini(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] rows,
    const double[::1] values,
    const cnp.int64_t[::1] features,
    const double[::1] weight,
    const double[::1] ypos,
    double total_w,
    double total_pos,
):
    cdef Py_ssize_t fi, k, start, end, f
    cdef cnp.int64_t r
    cdef double w, v, prev, nz_w, nz_p, zero_w, zero_p, lw, lp, score
    cdef bint has_prev, zero_done
    cdef Py_ssize_t n_cand = 0
    cdef Py_ssize_t cap = _capacity(indptr, features)
    cdef cnp.ndarray[double, ndim=1] cs_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cf_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] ct_arr = np.empty(cap, dtype=np.float64)
    cdef double[::1] cs = cs_arr
    cdef cnp.int64_t[::1] cf = cf_arr
    cdef double[::1] ct = ct_arr

    with nogil:
        for fi in range(features.shape[0]):
            f = features[fi]
            start = indptr[f]
            end = indptr[f + 1]
            nz_w = 0.0
            nz_p = 0.0
            for k in range(start, end):
                r = rows[k]
                w = weight[r]
                if w != 0.0:
                    nz_w += w
                    nz_p += w * ypos[r]
            zero_w = total_w - nz_w
            zero_p = total_pos - nz_p
            if zero_w < 0.5:
                zero_w = 0.0
                zero_p = 0.0
            zero_done = zero_w == 0.0
            lw = 0.0
            lp = 0.0
            prev = 0.0
            has_prev = False
            for k in range(start, end):
                r = rows[k]
                w = weight[r]
                if w == 0.0:
                    continue
                v = values[k]
                if not zero_done and v > 0.0:
                    if has_prev and lw > 0.0 and total_w - lw > 0.0:
                        score = _gini_score(total_w, total_pos, lw, lp)
                        n_cand = _push(cs, cf, ct, n_cand, score, f, prev / 2.0)
                    lw += zero_w
                    lp += zero_p
                    prev = 0.0
                    has_prev = True
                    zero_done = True
                if has_prev and v > prev and total_w - lw > 0.0:
                    score = _gini_score(total_w, total_pos, lw, lp)
                    n_cand = _push(cs, cf, ct, n_cand, score, f, (prev + v) / 2.0)
                lw += w
                lp += w * ypos[r]
                prev = v
                has_prev = True
            if not zero_done and has_prev and total_w - lw > 0.0:
                score = _gini_score(total_w, total_pos, lw, lp)
                n_cand = _push(cs, cf, ct, n_cand, score, f, prev / 2.0)
    return _select(cs, cf, ct, n_cand)


cdef inline double _newton_score(double g, double h, double gl, double hl, double lam) nogil:
    cdef double gr = g - gl
    cdef double hr = h - hl
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - g * g / (h + lam))


def best_split_newton(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] rows,
    const double[::1] values,
    const cnp.int64_t[::1] features,
    const double[::1] weight,
    const double[::1] grad,
    const double[::1] hess,
    double total_w,
    double total_g,
    double total_h,
    double reg_lambda,
    double min_child_weight,
):
    cdef Py_ssize_t fi, k, start, end, f
    cdef cnp.int64_t r
    cdef double w, v, prev, nz_w, nz_g, nz_h, zero_w, zero_g, zero_h
    cdef double lw, lg, lh, score
    cdef bint has_prev, zero_done
    cdef Py_ssize_t n_cand = 0
    cdef Py_ssize_t cap = _capacity(indptr, features)
    cdef cnp.ndarray[double, ndim=1] cs_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cf_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] ct_arr = np.empty(cap, dtype=np.float64)
    cdef double[::1] cs = cs_arr
    cdef cnp.int64_t[::1] cf = cf_arr
    cdef double[::1] ct = ct_arr

    with nogil:
        for fi in range(features.shape[0]):
            f = features[fi]
            start = indptr[f]
            end = indptr[f + 1]
            nz_w = 0.0
            nz_g = 0.0
            nz_h = 0.0
            for k in range(start, end):
                r = rows[k]
                w = weight[r]
                if w != 0.0:
                    nz_w += w
                    nz_g += w * grad[r]
                    nz_h += w * hess[r]
            zero_w = total_w - nz_w
            zero_g = total_g - nz_g
            zero_h = total_h - nz_h
            if zero_w < 0.5:
                zero_w = 0.0
                zero_g = 0.0
                zero_h = 0.0
            zero_done = zero_w == 0.0
            lw = 0.0
            lg = 0.0
            lh = 0.0
            prev = 0.0
            has_prev = False
            for k in range(start, end):
                r = rows[k]
                w = weight[r]
                if w == 0.0:
                    continue
                v = values[k]
                if not zero_done and v > 0.0:
                    if (has_prev and lw > 0.0 and total_w - lw > 0.0
                            and lh >= min_child_weight
                            and total_h - lh >= min_child_weight):
                        score = _newton_score(total_g, total_h, lg, lh, reg_lambda)
                        n_cand = _push(cs, cf, ct, n_cand, score, f, prev / 2.0)
                    lw += zero_w
                    lg += zero_g
                    lh += zero_h
                    prev = 0.0
                    has_prev = True
                    zero_done = True
                if (has_prev and v > prev and total_w - lw > 0.0
                        and lh >= min_child_weight
                        and total_h - lh >= min_child_weight):
                    score = _newton_score(total_g, total_h, lg, lh, reg_lambda)
                    n_cand = _push(cs, cf, ct, n_cand, score, f, (prev + v) / 2.0)
                lw += w
                lg += w * grad[r]
                lh += w * hess[r]
                prev = v
                has_prev = True
            if (not zero_done and has_prev and total_w - lw > 0.0
                    and lh >= min_child_weight
                    and total_h - lh >= min_child_weight):
                score = _newton_score(total_g, total_h, lg, lh, reg_lambda)
                n_cand = _push(cs, cf, ct, n_cand, score, f, prev / 2.0)
    return _select(cs, cf, ct, n_cand)


def tsne_gradient(const double[:, ::1] Y, const double[:, ::1] P, double exaggeration):
    """Return (gradient, Q normaliser) for the Student-t t-SNE objective."""
    cdef Py_ssize_t n = Y.shape[0]
    cdef Py_ssize_t i, j
    cdef double dx, dy, num, sum_q = 0.0, mult
    cdef cnp.ndarray[double, ndim=2] num_arr = np.zeros((n, n), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.zeros((n, 2), dtype=np.float64)
    cdef double[:, ::1] nm = num_arr
    cdef double[:, ::1] grad = grad_arr

    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dx = Y[i, 0] - Y[j, 0]
                dy = Y[i, 1] - Y[j, 1]
                num = 1.0 / (1.0 + dx * dx + dy * dy)
                nm[i, j] = num
                nm[j, i] = num
                sum_q += 2.0 * num
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                mult = (exaggeration * P[i, j] - nm[i, j] / sum_q) * nm[i, j]
                grad[i, 0] += mult * (Y[i, 0] - Y[j, 0])
                grad[i, 1] += mult * (Y[i, 1] - Y[j, 1])
            grad[i, 0] *= 4.0
            grad[i, 1] *= 4.0
    return grad_arr, sum_q
