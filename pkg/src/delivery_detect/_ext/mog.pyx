# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Per-pixel Stauffer-Grimson mixture update.

Arithmetic mirrors ``delivery_detect._fallback.mog_update`` operation for
operation so both backends produce bit-identical models and masks.
"""
import numpy as np

from libc.math cimport sqrt

cdef enum:
    MAX_K = 16


cdef inline void _order_desc(double* w, double* var, Py_ssize_t K,
                             double* ratio, Py_ssize_t* order) noexcept nogil:
    # stable insertion sort of components by weight / sigma, descending
    cdef Py_ssize_t i, j, k
    cdef double r
    for k in range(K):
        ratio[k] = w[k] / sqrt(var[k])
    for i in range(K):
        k = i
        r = ratio[k]
        j = i
        while j > 0 and ratio[order[j - 1]] < r:
            order[j] = order[j - 1]
            j -= 1
        order[j] = k


def mog_update(double[:, :, ::1] means, double[:, :, ::1] variances,
               double[:, :, ::1] weights, const double[:, ::1] frame,
               double rho, double bg_threshold, double gate,
               double var_init, double var_floor, double w_init):
    cdef Py_ssize_t H = frame.shape[0]
    cdef Py_ssize_t W = frame.shape[1]
    cdef Py_ssize_t K = means.shape[2]
    if K > MAX_K:
        raise ValueError(f"at most {MAX_K} components supported, got {K}")
    out = np.zeros((H, W), dtype=np.uint8)
    cdef unsigned char[:, ::1] mask = out
    cdef double ratio[MAX_K]
    cdef Py_ssize_t order[MAX_K]
    cdef Py_ssize_t y, x, k, p, j, matched
    cdef double v, d, total, cum
    cdef double omr = 1.0 - rho
    cdef double gate2 = gate * gate
    cdef double* w
    cdef double* mu
    cdef double* var
    cdef bint in_bg

    with nogil:
        for y in range(H):
            for x in range(W):
                v = frame[y, x]
                w = &weights[y, x, 0]
                mu = &means[y, x, 0]
                var = &variances[y, x, 0]

                _order_desc(w, var, K, ratio, order)
                matched = -1
                for p in range(K):
                    k = order[p]
                    if w[k] > 0.0:
                        d = v - mu[k]
                        if d * d < gate2 * var[k]:
                            matched = k
                            break

                for k in range(K):
                    w[k] = w[k] * omr

                if matched >= 0:
                    w[matched] = w[matched] + rho
                    mu[matched] = omr * mu[matched] + rho * v
                    d = v - mu[matched]
                    var[matched] = omr * var[matched] + rho * (d * d)
                    if var[matched] < var_floor:
                        var[matched] = var_floor
                else:
                    j = 0
                    for k in range(1, K):
                        if w[k] < w[j]:
                            j = k
                    mu[j] = v
                    var[j] = var_init
                    w[j] = w_init
                    total = w[0]
                    for k in range(1, K):
                        total = total + w[k]
                    if total > 1.0:
                        for k in range(K):
                            w[k] = w[k] / total
                    mask[y, x] = 1
                    continue

                _order_desc(w, var, K, ratio, order)
                cum = 0.0
                in_bg = False
                for p in range(K):
                    k = order[p]
                    if k == matched:
                        in_bg = True
                        break
                    cum = cum + w[k]
                    if cum >= bg_threshold:
                        break
                if not in_bg:
                    mask[y, x] = 1
    return out
