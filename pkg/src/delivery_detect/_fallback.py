"""Pure numpy/scipy versions of the compiled kernels in ``_ext``.

Each function performs the same floating point operations, in the same
order, as its Cython counterpart.
"""
import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=bool)


def _order_desc(weights, variances):
    ratio = weights / np.sqrt(variances)
    return np.argsort(-ratio, axis=-1, kind="stable")


def mog_update(means, variances, weights, frame, rho, bg_threshold, gate,
               var_init, var_floor, w_init):
    K = means.shape[2]
    omr = 1.0 - rho
    gate2 = gate * gate
    v = frame[..., None]

    order = _order_desc(weights, variances)
    d = v - means
    ok = (weights > 0.0) & (d * d < gate2 * variances)
    ok_sorted = np.take_along_axis(ok, order, axis=-1)
    has_match = ok_sorted.any(axis=-1)
    first = np.argmax(ok_sorted, axis=-1)
    matched = np.take_along_axis(order, first[..., None], axis=-1)[..., 0]

    weights *= omr

    ys, xs = np.nonzero(has_match)
    ks = matched[ys, xs]
    vm = frame[ys, xs]
    weights[ys, xs, ks] = weights[ys, xs, ks] + rho
    mu = omr * means[ys, xs, ks] + rho * vm
    means[ys, xs, ks] = mu
    dm = vm - mu
    var = omr * variances[ys, xs, ks] + rho * (dm * dm)
    variances[ys, xs, ks] = np.maximum(var, var_floor)

    uy, ux = np.nonzero(~has_match)
    if uy.size:
        w_u = weights[uy, ux]
        j = np.argmin(w_u, axis=-1)
        means[uy, ux, j] = frame[uy, ux]
        variances[uy, ux, j] = var_init
        w_u[np.arange(j.size), j] = w_init
        total = w_u[:, 0].copy()
        for k in range(1, K):
            total = total + w_u[:, k]
        over = total > 1.0
        w_u[over] = w_u[over] / total[over, None]
        weights[uy, ux] = w_u

    order = _order_desc(weights, variances)
    cum = np.cumsum(np.take_along_axis(weights, order, axis=-1), axis=-1)
    reached = cum >= bg_threshold
    last_bg = np.where(reached.any(axis=-1), np.argmax(reached, axis=-1), K - 1)
    pos = np.argmax(order == matched[..., None], axis=-1)
    foreground = ~has_match | (pos > last_bg)
    return foreground.astype(np.uint8)


def label8(mask):
    labels, n = ndimage.label(mask, structure=_EIGHT)
    return labels.astype(np.int32, copy=False), int(n)
