"""Fixed-shape classifier inputs from motion events."""
import math
from dataclasses import dataclass, field

import cv2
import numpy as np
import torch
import torchvision.transforms.functional as TF

from ..geometry import intersect, rasterize_boxes
from .annotations import DELIVERY

CLIP_LEN = 16
CLIP_SIZE = 112


@dataclass(frozen=True)
class AugmentConfig:
    temporal_jitter: int = 10
    color_jitter_prob: float = 0.2
    brightness: float = 0.1
    contrast: float = 0.1
    saturation: float = 0.1
    hue: float = 0.1
    flip_prob: float = 0.5


@dataclass
class ClipSample:
    tensor: np.ndarray  # (3, T, H, W) float32 in [0, 1]
    masks: np.ndarray  # (T, H, W) uint8 person masks
    boxes: list  # per frame, person boxes in clip pixels
    label: int  # 1 = delivery
    event_id: str = ""
    indices: tuple = ()
    jitter: tuple = (0, 0)
    flipped: bool = False
    color_jittered: bool = False
    meta: dict = field(default_factory=dict)


def round_half_up(x):
    return int(math.floor(x + 0.5))


def sample_indices(start, end, n=CLIP_LEN):
    """``n`` frame indices spread uniformly over the inclusive span (repeats when short)."""
    if end < start:
        raise ValueError("empty span")
    length = end - start + 1
    if n == 1:
        return [start]
    return [start + round_half_up(i * (length - 1) / (n - 1)) for i in range(n)]


def jitter_span(start, end, n_frames, rng, max_jitter=10):
    """Independently shift both bounds by U{-max_jitter..max_jitter}, clamped to the video."""
    ds, de = (int(v) for v in rng.integers(-max_jitter, max_jitter + 1, size=2))
    s = min(max(start + ds, 0), n_frames - 1)
    e = min(max(end + de, 0), n_frames - 1)
    if s >= e:
        s, e = start, end
    return s, e, (s - start, e - end)


def letterbox_transform(crop_w, crop_h, size=CLIP_SIZE):
    """(scale, new_w, new_h, offset_x, offset_y) to fit a crop into a centred square."""
    scale = size / max(crop_w, crop_h)
    nw = max(1, min(size, round_half_up(crop_w * scale)))
    nh = max(1, min(size, round_half_up(crop_h * scale)))
    return scale, nw, nh, (size - nw) // 2, (size - nh) // 2


def letterbox(img, size=CLIP_SIZE):
    h, w = img.shape[:2]
    scale, nw, nh, ox, oy = letterbox_transform(w, h, size)
    interp = cv2.INTER_AREA if scale < 1 else cv2.INTER_LINEAR
    out = np.zeros((size, size) + img.shape[2:], dtype=img.dtype)
    out[oy:oy + nh, ox:ox + nw] = cv2.resize(img, (nw, nh), interpolation=interp)
    return out


def _color_jitter(content, rng, cfg):
    """content: (T, 3, h, w) float tensor in [0, 1]. Same factors for every frame."""
    b = rng.uniform(1 - cfg.brightness, 1 + cfg.brightness)
    c = rng.uniform(1 - cfg.contrast, 1 + cfg.contrast)
    s = rng.uniform(1 - cfg.saturation, 1 + cfg.saturation)
    h = rng.uniform(-cfg.hue, cfg.hue)
    content = TF.adjust_brightness(content, b)
    content = TF.adjust_contrast(content, c)
    content = TF.adjust_saturation(content, s)
    return TF.adjust_hue(content, h)


def _get_frames(frames, indices):
    if hasattr(frames, "read"):
        got = frames.read(indices)
        return [got[i] for i in indices]
    return [np.asarray(frames[i]) for i in indices]


class EventFrames:
    """Letterboxed thumbnail content of selected frames of one event.

    Sampling from this instead of raw frames gives the same clips without
    decoding the video again; ``indices`` must cover every frame a clip can
    draw (for training, the span widened by the temporal jitter).
    """

    def __init__(self, frames, event, indices, size=CLIP_SIZE):
        self.event_id = event.event_id
        self.size = size
        indices = sorted(set(int(i) for i in indices))
        tx0, ty0, tx1, ty1 = event.thumbnail_bbox
        _, nw, nh, ox, oy = letterbox_transform(tx1 - tx0, ty1 - ty0, size)
        raw = _get_frames(frames, indices)
        self._pos = {i: k for k, i in enumerate(indices)}
        self._content = np.stack([letterbox(f[ty0:ty1, tx0:tx1], size)[oy:oy + nh, ox:ox + nw]
                                  for f in raw])

    @classmethod
    def for_training(cls, frames, event, n_frames, max_jitter, size=CLIP_SIZE):
        lo = max(0, event.start_frame - max_jitter)
        hi = min(n_frames - 1, event.end_frame + max_jitter)
        return cls(frames, event, range(lo, hi + 1), size)

    @classmethod
    def for_inference(cls, frames, event, clip_len=CLIP_LEN, size=CLIP_SIZE):
        return cls(frames, event, sample_indices(event.start_frame, event.end_frame, clip_len), size)

    def content(self, indices):
        try:
            return self._content[[self._pos[i] for i in indices]]
        except KeyError as exc:
            raise KeyError(f"frame {exc.args[0]} not cached for event {self.event_id}") from None

    @property
    def nbytes(self):
        return self._content.nbytes


def person_boxes_at(tracks, frame_idx):
    return [t.boxes[frame_idx] for t in tracks if frame_idx in t.boxes]


def sample_clip(frames, event, tracks=(), train_mode=False, rng=None, n_frames=None,
                label=None, augment=AugmentConfig(), clip_len=CLIP_LEN, size=CLIP_SIZE):
    """Build a :class:`ClipSample` for ``event`` from a frame source.

    ``frames`` is an indexable sequence of RGB frames, an object with
    ``read(indices) -> {index: frame}``, or an :class:`EventFrames` cache. ``tracks`` are the video's person
    tracks; their boxes become the excitation masks. Masks and boxes are
    flipped together with the frames.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if n_frames is None:
        n_frames = len(frames)
    start, end = event.start_frame, event.end_frame
    jitter = (0, 0)
    if train_mode and augment.temporal_jitter:
        start, end, jitter = jitter_span(start, end, n_frames, rng, augment.temporal_jitter)
    idx = sample_indices(start, end, clip_len)
    tx0, ty0, tx1, ty1 = event.thumbnail_bbox
    scale, nw, nh, ox, oy = letterbox_transform(tx1 - tx0, ty1 - ty0, size)
    if isinstance(frames, EventFrames):
        if frames.event_id != event.event_id or frames.size != size:
            raise ValueError("frame cache belongs to a different event or size")
        content = frames.content(idx)
    else:
        raw = _get_frames(frames, idx)
        content = np.stack([letterbox(f[ty0:ty1, tx0:tx1], size)[oy:oy + nh, ox:ox + nw] for f in raw])
    content = torch.from_numpy(content).permute(0, 3, 1, 2).float().div_(255.0)

    jittered = False
    flipped = False
    if train_mode:
        jittered = bool(rng.random() < augment.color_jitter_prob)
        if jittered:
            content = _color_jitter(content, rng, augment)
        flipped = bool(rng.random() < augment.flip_prob)

    canvas = torch.zeros((clip_len, 3, size, size), dtype=torch.float32)
    canvas[:, :, oy:oy + nh, ox:ox + nw] = content
    tensor = canvas.permute(1, 0, 2, 3).contiguous().numpy()

    boxes = []
    for i in idx:
        fb = []
        for b in person_boxes_at(tracks, i):
            inter = intersect(b, event.thumbnail_bbox)
            if inter is None:
                continue
            fb.append(((inter[0] - tx0) * scale + ox, (inter[1] - ty0) * scale + oy,
                       (inter[2] - tx0) * scale + ox, (inter[3] - ty0) * scale + oy))
        boxes.append(fb)
    masks = np.stack([rasterize_boxes(fb, size, size) for fb in boxes])

    if flipped:
        tensor, masks, boxes = flip_clip(tensor, masks, boxes, size)

    if label is None:
        label = 0
    elif isinstance(label, str):
        label = int(label == DELIVERY)
    return ClipSample(tensor=tensor, masks=masks, boxes=boxes, label=int(label),
                      event_id=event.event_id, indices=tuple(idx), jitter=jitter,
                      flipped=flipped, color_jittered=jittered)


def flip_clip(tensor, masks, boxes, size=CLIP_SIZE):
    """Horizontal flip of frames, masks and boxes together."""
    tensor = np.ascontiguousarray(tensor[..., ::-1])
    masks = np.ascontiguousarray(masks[..., ::-1])
    boxes = [[(size - x1, y0, size - x0, y1) for x0, y0, x1, y1 in fb] for fb in boxes]
    return tensor, masks, boxes
