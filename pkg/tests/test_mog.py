import math

import numpy as np
import pytest

from delivery_detect.motion import MogConfig, PixelMixture, update_background


def reference_pixel_update(mu, var, w, x, cfg):
    """Scalar mixture update for one pixel; returns foreground flag."""
    K = len(mu)
    order = sorted(range(K), key=lambda k: -w[k] / math.sqrt(var[k]))
    match = next((k for k in order if w[k] > 0 and (x - mu[k]) ** 2 < cfg.gate ** 2 * var[k]), None)
    rho = cfg.learning_rate
    for k in range(K):
        w[k] *= 1 - rho
    if match is None:
        j = min(range(K), key=lambda k: w[k])
        mu[j], var[j], w[j] = x, cfg.var_init, cfg.weight_init
        s = sum(w)
        if s > 1:
            for k in range(K):
                w[k] /= s
    else:
        w[match] += rho
        mu[match] = (1 - rho) * mu[match] + rho * x
        var[match] = max((1 - rho) * var[match] + rho * (x - mu[match]) ** 2, cfg.var_floor)
    order = sorted(range(K), key=lambda k: -w[k] / math.sqrt(var[k]))
    background, cum = set(), 0.0
    for k in order:
        background.add(k)
        cum += w[k]
        if cum >= cfg.bg_threshold:
            break
    return match is None or match not in background


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_matches_scalar_reference(backend):
    from delivery_detect import kernels
    if backend == "cython" and kernels.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    cfg = MogConfig()
    rng = np.random.default_rng(0)
    H, W = 6, 7
    model = PixelMixture(H, W, cfg)
    ref = [[None] * W for _ in range(H)]
    base = rng.uniform(60, 200, (H, W))
    for t in range(60):
        frame = np.clip(base + rng.normal(0, 3, (H, W)), 0, 255)
        if t % 7 == 3:
            frame[rng.random((H, W)) < 0.3] = rng.uniform(0, 255)
        mask = update_background(model, frame, backend=backend)
        for y in range(H):
            for x in range(W):
                if ref[y][x] is None:
                    K = cfg.n_components
                    ref[y][x] = ([frame[y, x]] + [0.0] * (K - 1), [cfg.var_init] * K, [1.0] + [0.0] * (K - 1))
                mu, var, w = ref[y][x]
                fg = reference_pixel_update(mu, var, w, frame[y, x], cfg)
                assert bool(mask[y, x]) == fg
                np.testing.assert_allclose(model.means[y, x], mu, rtol=1e-12)
                np.testing.assert_allclose(model.weights[y, x], w, rtol=1e-12, atol=1e-15)
                np.testing.assert_allclose(model.variances[y, x], var, rtol=1e-12)


def test_static_scene_has_no_foreground():
    rng = np.random.default_rng(1)
    bg = rng.uniform(90, 160, (24, 32))
    model = PixelMixture(24, 32)
    for _ in range(30):
        mask = update_background(model, np.clip(bg + rng.normal(0, 1, bg.shape), 0, 255))
        assert mask.sum() == 0


def test_new_object_is_foreground_then_absorbed():
    bg = np.full((16, 16), 120.0)
    model = PixelMixture(16, 16)
    for _ in range(10):
        update_background(model, bg)
    scene = bg.copy()
    scene[4:8, 4:8] = 20.0
    first = update_background(model, scene)
    assert first[4:8, 4:8].all() and first.sum() == 16
    for _ in range(200):
        mask = update_background(model, scene)
    assert mask.sum() == 0


def test_weights_stay_normalised():
    rng = np.random.default_rng(2)
    model = PixelMixture(8, 8)
    for _ in range(100):
        update_background(model, rng.uniform(0, 255, (8, 8)))
        s = model.weights.sum(axis=-1)
        assert (s <= 1 + 1e-12).all() and (model.weights >= 0).all()
        assert (model.variances >= model.config.var_floor).all()


def test_input_validation():
    model = PixelMixture(4, 4)
    with pytest.raises(ValueError):
        update_background(model, np.zeros((4, 5)))
    with pytest.raises(ValueError):
        update_background(model, np.full((4, 4), np.nan))
    with pytest.raises(ValueError):
        update_background(model, np.full((4, 4), 300.0))
    with pytest.raises(ValueError):
        MogConfig(learning_rate=1.5)
