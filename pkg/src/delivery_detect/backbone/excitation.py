"""Training-only excitation of early feature maps inside person boxes."""
import math
from dataclasses import dataclass

import numpy as np
import torch

from ..geometry import rasterize_boxes


def alpha(n, N):
    """Cosine excitation strength for epoch ``n`` of ``N``: 1 at the start, 0 at the end."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 <= n <= N:
        raise ValueError(f"epoch {n} outside [0, {N}]")
    return 0.5 * (1.0 + math.cos(math.pi * n / N))


def excite(f, m, a):
    """Add ``a`` times the channel-mean of ``f``, restricted to mask ``m``, to every channel.

    ``f`` is (C, T, H, W) or (B, C, T, H, W); ``m`` is (T, H, W) or (B, T, H, W).
    """
    cdim = f.dim() - 4
    if m.shape != f.shape[:cdim] + f.shape[cdim + 1:]:
        raise ValueError(f"mask shape {tuple(m.shape)} does not match features {tuple(f.shape)}")
    mean = f.mean(dim=cdim, keepdim=True)
    return f + a * (mean * m.unsqueeze(cdim).to(f.dtype))


def build_mask(boxes, layer_dims, input_dims):
    """(T, H_l, W_l) uint8 mask from per-frame person boxes given at input resolution.

    Only layers that keep the input's temporal extent can be excited.
    """
    T_l, H_l, W_l = layer_dims
    T_in, H_in, W_in = input_dims
    if T_l != T_in or len(boxes) != T_in:
        raise ValueError(f"temporal extent mismatch: layer {T_l}, input {T_in}, boxes {len(boxes)}")
    return np.stack([rasterize_boxes(fb, H_l, W_l, W_l / W_in, H_l / H_in) for fb in boxes])


@dataclass(frozen=True)
class ExcitationSchedule:
    total_epochs: int
    epoch: int
    layers: tuple = (1, 2)

    def __post_init__(self):
        if not 0 <= self.epoch <= self.total_epochs:
            raise ValueError("need 0 <= epoch <= total_epochs")

    @property
    def alpha(self):
        return alpha(self.epoch, self.total_epochs)


@dataclass
class Excitation:
    """Per-batch excitation input: boxes per sample per frame (input pixels) and strength."""

    boxes: list
    strength: float
    layers: tuple = (1, 2)
    input_dims: tuple = (16, 112, 112)

    def mask_for(self, layer_shape, device=None):
        T, H, W = layer_shape
        masks = np.stack([build_mask(b, (T, H, W), self.input_dims) for b in self.boxes])
        return torch.from_numpy(masks).to(device)
