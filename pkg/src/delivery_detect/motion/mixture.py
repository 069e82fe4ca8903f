"""Per-pixel Gaussian mixture background model on grayscale intensity."""
from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True)
class MogConfig:
    n_components: int = 5
    learning_rate: float = 0.005
    bg_threshold: float = 0.7
    var_init: float = 225.0
    var_floor: float = 4.0
    gate: float = 2.5
    # weight given to a freshly replaced component
    weight_init: float = 0.005

    def __post_init__(self):
        if not 1 <= self.n_components <= 16:
            raise ValueError("n_components must be in [1, 16]")
        if not 0.0 < self.learning_rate < 1.0:
            raise ValueError("learning_rate must be in (0, 1)")
        if not 0.0 < self.bg_threshold <= 1.0:
            raise ValueError("bg_threshold must be in (0, 1]")
        if self.var_floor <= 0 or self.var_init < self.var_floor:
            raise ValueError("need 0 < var_floor <= var_init")


class PixelMixture:
    """Grid of per-pixel mixtures: means, variances and weights of shape (H, W, K).

    The model is seeded from the first frame it sees: component 0 takes the
    frame intensity with weight 1, the rest start empty.
    """

    def __init__(self, height, width, config=None):
        self.config = config or MogConfig()
        self.shape = (int(height), int(width))
        K = self.config.n_components
        self.means = np.zeros(self.shape + (K,), dtype=np.float64)
        self.variances = np.full(self.shape + (K,), self.config.var_init, dtype=np.float64)
        self.weights = np.zeros(self.shape + (K,), dtype=np.float64)
        self.n_frames = 0

    def seed(self, frame):
        self.means[..., 0] = frame
        self.weights[..., 0] = 1.0


def _as_gray(frame, shape):
    arr = np.asarray(frame)
    if arr.shape != shape:
        raise ValueError(f"frame shape {arr.shape} does not match model grid {shape}")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("frame contains non-finite pixels")
    if arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 255.0:
        raise ValueError("pixel intensities must lie in [0, 255]")
    return arr


def update_background(model, frame, backend=None):
    """Fold one grayscale frame into ``model`` and return its binary foreground mask.

    A pixel matches a component when it lies within ``gate`` standard
    deviations of it (components tried in decreasing weight/sigma order).
    The matched component moves toward the pixel with the learning rate;
    with no match the lowest-weight component is replaced. The pixel is
    foreground unless its matched component belongs to the background set,
    the highest weight/sigma components whose cumulative weight first
    reaches ``bg_threshold``.
    """
    gray = _as_gray(frame, model.shape)
    cfg = model.config
    if model.n_frames == 0:
        model.seed(gray)
    mask = kernels.mog_update(
        model.means, model.variances, model.weights, gray,
        cfg.learning_rate, cfg.bg_threshold, cfg.gate,
        cfg.var_init, cfg.var_floor, cfg.weight_init, backend=backend,
    )
    model.n_frames += 1
    return mask
