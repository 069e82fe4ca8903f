import os
import subprocess
import sys
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from delivery_detect import kernels

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def bfs_label8(mask):
    """Flood fill in raster order; labels numbered by first pixel."""
    H, W = mask.shape
    out = np.zeros((H, W), np.int32)
    n = 0
    for y in range(H):
        for x in range(W):
            if mask[y, x] and not out[y, x]:
                n += 1
                out[y, x] = n
                q = deque([(y, x)])
                while q:
                    cy, cx = q.popleft()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = cy + dy, cx + dx
                            if 0 <= ny < H and 0 <= nx < W and mask[ny, nx] and not out[ny, nx]:
                                out[ny, nx] = n
                                q.append((ny, nx))
    return out, n


@settings(max_examples=150, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 1)))
@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_ext)])
def test_label8_matches_flood_fill(backend, mask):
    mask = np.ascontiguousarray(mask)
    labels, n = kernels.label8(mask, backend=backend)
    want, wn = bfs_label8(mask)
    assert n == wn
    np.testing.assert_array_equal(labels, want)


def _mixture(rng, H, W, K):
    means = rng.uniform(0, 255, (H, W, K))
    var = rng.uniform(4, 400, (H, W, K))
    w = rng.random((H, W, K)) * (rng.random((H, W, K)) < 0.7)
    w /= np.maximum(w.sum(-1, keepdims=True), 1.0)
    return means, var, w


@needs_ext
@pytest.mark.parametrize("K", [1, 3, 5])
def test_mog_backends_bit_identical(K):
    rng = np.random.default_rng(K)
    state = [_mixture(rng, 40, 50, K) for _ in range(2)]
    state[1] = tuple(a.copy() for a in state[0])
    for t in range(20):
        frame = rng.uniform(0, 255, (40, 50))
        if t % 2:
            frame = state[0][0][..., 0] + rng.normal(0, 2, (40, 50))
            frame = np.clip(frame, 0, 255)
        frame = np.ascontiguousarray(frame)
        masks = [kernels.mog_update(*s, frame, 0.005, 0.7, 2.5, 225.0, 4.0, 0.005, backend=b)
                 for s, b in zip(state, ("python", "cython"))]
        np.testing.assert_array_equal(masks[0], masks[1])
        for a, b in zip(state[0], state[1]):
            assert np.array_equal(a, b)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.label8(np.zeros((2, 2), np.uint8), backend="fortran")


def test_env_var_forces_fallback():
    env = dict(os.environ, DELIVERY_DETECT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from delivery_detect import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
