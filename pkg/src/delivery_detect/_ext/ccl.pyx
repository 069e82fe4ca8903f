# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Two-pass 8-connected component labelling with union-find.

Labels are numbered 1..n in raster order of each component's first pixel,
matching ``scipy.ndimage.label``.
"""
import numpy as np


cdef inline Py_ssize_t _find(Py_ssize_t* parent, Py_ssize_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef inline void _union(Py_ssize_t* parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label8(const unsigned char[:, ::1] mask):
    cdef Py_ssize_t H = mask.shape[0]
    cdef Py_ssize_t W = mask.shape[1]
    labels_arr = np.zeros((H, W), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    # worst case one provisional label per pixel
    parent_arr = np.zeros(H * W // 2 + 2, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    remap_arr = np.zeros(H * W // 2 + 2, dtype=np.int32)
    cdef int[::1] remap = remap_arr
    cdef Py_ssize_t y, x, nxt = 1, cur, n
    cdef int final = 0

    with nogil:
        for y in range(H):
            for x in range(W):
                if not mask[y, x]:
                    continue
                cur = 0
                # previously visited neighbours: W, NW, N, NE
                if x > 0 and labels[y, x - 1]:
                    cur = labels[y, x - 1]
                if y > 0:
                    if x > 0 and labels[y - 1, x - 1]:
                        n = labels[y - 1, x - 1]
                        if cur:
                            _union(&parent[0], cur, n)
                        else:
                            cur = n
                    if labels[y - 1, x]:
                        n = labels[y - 1, x]
                        if cur:
                            _union(&parent[0], cur, n)
                        else:
                            cur = n
                    if x + 1 < W and labels[y - 1, x + 1]:
                        n = labels[y - 1, x + 1]
                        if cur:
                            _union(&parent[0], cur, n)
                        else:
                            cur = n
                if not cur:
                    cur = nxt
                    parent[cur] = cur
                    nxt += 1
                labels[y, x] = <int>cur

        for n in range(1, nxt):
            cur = _find(&parent[0], n)
            if cur == n:
                final += 1
                remap[n] = final
        for y in range(H):
            for x in range(W):
                if labels[y, x]:
                    labels[y, x] = remap[_find(&parent[0], labels[y, x])]
    return labels_arr, final
