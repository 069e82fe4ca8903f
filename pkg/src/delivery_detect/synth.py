"""Deterministic synthetic doorbell scenes with exact person tracks.

Actors are flat sprites (body, head, optional parcel or bag) moving over a
smooth textured background with mild sensor noise. Luma of every sprite is
kept at least 50 grey levels away from the background so the foreground is
unambiguous for the background model.

Scenario kinds:

* ``delivery``: approach, stoop, set a parcel down, stand, retreat.
* ``walk_by``: cross the frame at a distance without stopping.
* ``resident_exit``: emerge from the bottom edge and leave sideways (or the reverse).
* ``static_distractor``: only a small textured patch jittering by one pixel.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .dataset.annotations import DELIVERY, NON_DELIVERY, PersonTrack, VideoAnnotation
from .dataset.splits import build_splits, save_splits
from .video import write_video

log = logging.getLogger(__name__)

KINDS = ("delivery", "walk_by", "resident_exit", "static_distractor")
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    width: int = 320
    height: int = 240
    fps: float = 10.0
    n_frames: int = 120
    actor_height: tuple = (48, 64)
    leg_frames: tuple = (22, 32)
    background_seed: int = 0
    extra_distractor: bool = False
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.n_frames < 100:
            raise ValueError("scenarios need at least 100 frames")


@dataclass
class Scene:
    frames: np.ndarray  # (T, H, W, 3) uint8
    tracks: list
    tag: str
    activity: tuple  # inclusive (start, end) of the scripted activity, None if no person
    kind: str


def _color(rng, dark):
    """RGB whose luma is in [15, 45] (dark) or [205, 240] (bright)."""
    target = rng.uniform(15, 45) if dark else rng.uniform(205, 240)
    tint = rng.uniform(-25, 25, 3)
    tint -= tint @ _LUMA
    rgb = np.clip(target + tint, 0, 255)
    rgb += target - rgb @ _LUMA
    return np.clip(rgb, 0, 255)


def make_background(seed, width, height):
    rng = np.random.default_rng([seed, 7919])
    coarse = rng.uniform(105, 145, (6, 8))
    base = cv2.resize(coarse, (width, height), interpolation=cv2.INTER_CUBIC)
    fine = cv2.resize(rng.uniform(-8, 8, (30, 40)), (width, height), interpolation=cv2.INTER_LINEAR)
    luma = np.clip(base + fine, 95, 155)
    # a couple of static porch structures
    for _ in range(2):
        w, h = rng.integers(30, 80), rng.integers(15, 40)
        x, y = rng.integers(0, width - w), rng.integers(0, height - h)
        luma[y:y + h, x:x + w] = np.clip(luma[y:y + h, x:x + w] + rng.uniform(-12, 12), 95, 155)
    tint = rng.uniform(-6, 6, 3)
    return np.clip(luma[..., None] + tint, 90, 160).astype(np.float32)


def _interp(keys, t):
    """Piecewise-linear (cx, yb, scale) at time t; None outside the keyframe range."""
    if t < keys[0][0] or t > keys[-1][0]:
        return None
    for (t0, *a), (t1, *b) in zip(keys, keys[1:]):
        if t0 <= t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return tuple(x + f * (y - x) for x, y in zip(a, b))
    return tuple(keys[-1][1:])


def _rect(cx, yb, w, h):
    return (int(round(cx - w / 2)), int(round(yb - h)), int(round(cx + w / 2)), int(round(yb)))


def _clip_box(box, width, height):
    x0, y0, x1, y1 = box
    x0, y0, x1, y1 = max(x0, 0), max(y0, 0), min(x1, width), min(y1, height)
    if x1 <= x0 or y1 <= y0:
        return None
    return (x0, y0, x1, y1)


class _Actor:
    def __init__(self, rng, keys, height, item=None, drop_t=None, bag_side=0):
        self.keys = keys
        self.h = height
        self.w = int(round(0.38 * height))
        dark = rng.random() < 0.5
        self.body = _color(rng, dark)
        self.head = _color(rng, not dark if rng.random() < 0.5 else dark)
        self.item = item  # (rgb, w, h) parcel
        self.drop_t = drop_t
        self.bag_side = bag_side
        self.bag = _color(rng, rng.random() < 0.5) if bag_side else None
        self.phase = int(rng.integers(0, 4))

    def state(self, t):
        return _interp(self.keys, t)

    def parcel_on_ground(self, t):
        if self.item is None or self.drop_t is None or t < self.drop_t:
            return None
        cx, yb, _ = _interp(self.keys, self.drop_t)
        _, iw, ih = self.item
        return _rect(cx, yb, iw, ih)

    def draw(self, img, t):
        """Draw at frame t; returns the clipped sprite box or None when off-screen."""
        st = self.state(t)
        if st is None:
            return None
        H, W = img.shape[:2]
        cx, yb, s = st
        h = self.h * s
        box = _rect(cx, yb, self.w, h)
        x0, y0, x1, y1 = box
        head_h = int(round(0.22 * h))
        moving = self._moving(t)
        _fill(img, (x0, y0 + head_h, x1, y1), self.body)
        hw = max(2, int(round(0.3 * self.w)))
        _fill(img, (int(round(cx)) - hw, y0, int(round(cx)) + hw, y0 + head_h), self.head)
        if moving and ((t + self.phase) // 3) % 2 == 0:
            # leg gap while walking
            leg_top = y1 - int(round(0.35 * h))
            g = int(round(cx))
            img[max(leg_top, 0):max(min(y1, H), 0), max(g - 1, 0):max(min(g + 2, W), 0)] = _BG_SENTINEL
        if self.item is not None and (self.drop_t is None or t < self.drop_t):
            rgb, iw, ih = self.item
            _fill(img, _rect(cx, yb - 0.45 * h + ih / 2, iw, ih), rgb)
        if self.bag is not None:
            bx = cx + self.bag_side * (self.w / 2 + 3)
            _fill(img, _rect(bx, yb - 0.3 * h, 6, 10), self.bag)
        sprite = box
        if self.bag is not None:
            bb = _rect(cx + self.bag_side * (self.w / 2 + 3), yb - 0.3 * h, 6, 10)
            sprite = (min(box[0], bb[0]), min(box[1], bb[1]), max(box[2], bb[2]), max(box[3], bb[3]))
        return _clip_box(sprite, W, H)

    def _moving(self, t):
        a, b = self.state(t), self.state(t + 1)
        return a is not None and b is not None and (abs(a[0] - b[0]) + abs(a[1] - b[1])) > 0.5


_BG_SENTINEL = -1.0


def _fill(img, box, rgb):
    H, W = img.shape[:2]
    x0, y0, x1, y1 = box
    x0, y0, x1, y1 = max(x0, 0), max(y0, 0), min(x1, W), min(y1, H)
    if x1 > x0 and y1 > y0:
        img[y0:y1, x0:x1] = rgb


def _parcel(rng):
    dark = rng.random() < 0.5
    luma = rng.uniform(20, 45) if dark else rng.uniform(205, 235)
    rgb = np.array([luma + 25, luma, luma - 35])
    rgb += luma - rgb @ _LUMA
    return (np.clip(rgb, 0, 255), int(rng.integers(10, 14)), int(rng.integers(7, 10)))


def _delivery(rng, spec):
    W, H = spec.width, spec.height
    h = float(rng.integers(*spec.actor_height, endpoint=True))
    w = 0.38 * h
    side = -1 if rng.random() < 0.5 else 1
    sx = -w if side < 0 else W + w
    sy = rng.uniform(0.5, 0.62) * H
    dx, dy = rng.uniform(0.35, 0.65) * W, rng.uniform(0.8, 0.95) * H
    n_app, n_ret = (int(rng.integers(*spec.leg_frames, endpoint=True)) for _ in range(2))
    hold, pause = int(rng.integers(3, 7)), int(rng.integers(2, 6))
    total = n_app + 6 + hold + pause + n_ret
    t0 = int(rng.integers(3, max(4, spec.n_frames - total - 4)))
    ey = sy + rng.uniform(-0.04, 0.04) * H
    t = t0
    keys = [(t, sx, sy, 1.0)]
    t += n_app
    keys.append((t, dx, dy, 1.0))
    t += 3
    keys.append((t, dx, dy, 0.6))
    drop_t = t + hold // 2
    t += hold
    keys.append((t, dx, dy, 0.6))
    t += 3
    keys.append((t, dx, dy, 1.0))
    t += pause
    keys.append((t, dx, dy, 1.0))
    t += n_ret
    keys.append((t, sx, ey, 1.0))
    return _Actor(rng, keys, h, item=_parcel(rng), drop_t=drop_t)


def _walk_by(rng, spec):
    W, H = spec.width, spec.height
    h = float(rng.integers(*spec.actor_height, endpoint=True))
    w = 0.38 * h
    side = -1 if rng.random() < 0.5 else 1
    y0 = rng.uniform(0.45, 0.7) * H
    y1 = y0 + rng.uniform(-0.05, 0.05) * H
    n = int(rng.integers(40, 71))
    t0 = int(rng.integers(3, spec.n_frames - n - 3))
    xa, xb = (-w, W + w) if side < 0 else (W + w, -w)
    bag = int(rng.choice([-1, 1])) if rng.random() < 0.3 else 0
    return _Actor(rng, [(t0, xa, y0, 1.0), (t0 + n, xb, y1, 1.0)], h, bag_side=bag)


def _resident(rng, spec):
    W, H = spec.width, spec.height
    h = float(rng.integers(*spec.actor_height, endpoint=True))
    w = 0.38 * h
    bx = rng.uniform(0.3, 0.7) * W
    start = (bx, H + 1.05 * h)
    mx = bx + rng.uniform(-0.1, 0.1) * W
    mid = (mx, rng.uniform(0.6, 0.75) * H)
    side = -1 if rng.random() < 0.5 else 1
    end = (-w if side < 0 else W + w, rng.uniform(0.5, 0.6) * H)
    leg1, leg2 = int(rng.integers(15, 26)), int(rng.integers(20, 36))
    pause = int(rng.integers(0, 7))
    t0 = int(rng.integers(3, spec.n_frames - leg1 - leg2 - pause - 3))
    pts = [start, mid, mid, end]
    if rng.random() < 0.5:
        pts = pts[::-1]
        leg1, leg2 = leg2, leg1
    ts = [t0, t0 + leg1, t0 + leg1 + pause, t0 + leg1 + pause + leg2]
    keys = [(t, x, y, 1.0) for t, (x, y) in zip(ts, pts)]
    if pause == 0:
        keys = [keys[0], keys[1], keys[3]]
    bag = int(rng.choice([-1, 1])) if rng.random() < 0.3 else 0
    return _Actor(rng, keys, h, bag_side=bag)


class _Distractor:
    """High-contrast patch jittering horizontally by one pixel (leaf / flag stand-in)."""

    def __init__(self, rng, width, height):
        self.s = int(rng.integers(14, 29))
        self.x = int(rng.integers(10, width - self.s - 10))
        self.y = int(rng.integers(10, height - self.s - 10))
        cells = rng.random((self.s // 3 + 1, self.s // 3 + 1)) < 0.5
        tex = np.kron(cells, np.ones((3, 3)))[:self.s, :self.s]
        self.patch = np.where(tex[..., None], 230.0, 25.0).astype(np.float32)

    def offset(self, t):
        return (0, 1, 0, -1)[t % 4]

    def draw(self, img, t):
        x = self.x + self.offset(t)
        img[self.y:self.y + self.s, x:x + self.s] = self.patch


def generate_scene(spec, seed):
    """Render a scenario. Same (spec, seed) gives bit-identical output."""
    rng = np.random.default_rng([int(seed), KINDS.index(spec.kind)])
    W, H = spec.width, spec.height
    bg = make_background(spec.background_seed, W, H)
    actors = []
    if spec.kind == "delivery":
        actors.append(_delivery(rng, spec))
    elif spec.kind == "walk_by":
        actors.append(_walk_by(rng, spec))
    elif spec.kind == "resident_exit":
        actors.append(_resident(rng, spec))
    distractors = []
    if spec.kind == "static_distractor" or spec.extra_distractor:
        distractors.append(_Distractor(rng, W, H))

    noise_rng = np.random.default_rng([int(seed), 104729])
    frames = np.empty((spec.n_frames, H, W, 3), dtype=np.uint8)
    boxes = [dict() for _ in actors]
    for t in range(spec.n_frames):
        img = np.full_like(bg, _BG_SENTINEL)
        for d in distractors:
            d.draw(img, t)
        for a in actors:
            p = a.parcel_on_ground(t)
            if p is not None:
                _fill(img, p, a.item[0])
        for i, a in enumerate(actors):
            box = a.draw(img, t)
            if box is not None:
                boxes[i][t] = box
        empty = img[..., :1] == _BG_SENTINEL
        img = np.where(empty, bg, img)
        if spec.noise_sigma > 0:
            img = img + noise_rng.normal(0.0, spec.noise_sigma, img.shape).astype(np.float32)
        frames[t] = np.clip(np.rint(img), 0, 255).astype(np.uint8)

    tag = DELIVERY if spec.kind == "delivery" else NON_DELIVERY
    tracks = [PersonTrack(i, b, tag) for i, b in enumerate(boxes) if b]
    activity = None
    if tracks:
        activity = (tracks[0].start_frame, tracks[0].end_frame)
    return Scene(frames, tracks, tag, activity, spec.kind)


@dataclass(frozen=True)
class SynthConfig:
    n_cameras: int = 30
    videos_per_camera: int = 10
    delivery_fraction: float = 1 / 3
    # relative frequency of the non-delivery kinds
    negative_mix: dict = field(default_factory=lambda: {
        "walk_by": 0.4, "resident_exit": 0.4, "static_distractor": 0.2})
    extra_distractor_prob: float = 0.25
    split_ratios: tuple = (0.6, 0.2, 0.2)
    scenario: dict = field(default_factory=dict)  # overrides for ScenarioSpec fields

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "split_ratios" in d:
            d["split_ratios"] = tuple(d["split_ratios"])
        if "scenario" in d:
            d["scenario"] = {k: tuple(v) if isinstance(v, list) else v
                             for k, v in d["scenario"].items()}
        return cls(**d)


def plan_corpus(config, seed):
    """Deterministic (video_id, camera_id, ScenarioSpec, scene_seed) list."""
    if config.n_cameras < 3:
        raise ValueError("need at least 3 cameras for camera-disjoint splits")
    n = config.n_cameras * config.videos_per_camera
    rng = np.random.default_rng([int(seed), 1])
    n_del = int(round(n * config.delivery_fraction))
    names = sorted(config.negative_mix)
    p = np.array([config.negative_mix[k] for k in names], dtype=float)
    counts = np.floor(p / p.sum() * (n - n_del)).astype(int)
    for i in np.argsort(-(p / p.sum() * (n - n_del) - counts), kind="stable")[: n - n_del - counts.sum()]:
        counts[i] += 1
    kinds = ["delivery"] * n_del + [k for k, c in zip(names, counts) for _ in range(c)]
    kinds = [kinds[i] for i in rng.permutation(n)]
    plan = []
    for i, kind in enumerate(kinds):
        cam = i // config.videos_per_camera
        spec = ScenarioSpec(
            kind=kind,
            background_seed=int(seed) * 100003 + cam,
            extra_distractor=bool(kind != "static_distractor" and rng.random() < config.extra_distractor_prob),
            **config.scenario,
        )
        plan.append((f"cam{cam:03d}_vid{i:04d}", f"cam{cam:03d}", spec, int(seed) * 1000003 + i))
    return plan


def build_corpus(config, seed, out_dir, video_format="mkv"):
    """Render a corpus to ``out_dir``: videos/, annotations/, splits.json, corpus.json.

    Returns the manifest dict; its ``manifest_hash`` depends only on the
    rendered content, not on container bytes.
    """
    out = Path(out_dir)
    (out / "videos").mkdir(parents=True, exist_ok=True)
    (out / "annotations").mkdir(parents=True, exist_ok=True)
    videos = []
    for video_id, camera_id, spec, scene_seed in plan_corpus(config, seed):
        scene = generate_scene(spec, scene_seed)
        name = f"{video_id}.{video_format}" if video_format else video_id
        write_video(out / "videos" / name, scene.frames, spec.fps)
        events = []
        if scene.activity is not None:
            events.append({"start_frame": scene.activity[0], "end_frame": scene.activity[1],
                           "tag": scene.tag, "kind": scene.kind})
        ann = VideoAnnotation(video_id, camera_id, scene.tag, spec.width, spec.height, spec.fps,
                              spec.n_frames, scene.tracks, events)
        ann.save(out / "annotations" / f"{video_id}.json")
        videos.append({
            "video_id": video_id, "camera_id": camera_id, "kind": spec.kind, "tag": scene.tag,
            "path": f"videos/{name}", "n_frames": spec.n_frames, "fps": spec.fps,
            "frames_sha256": hashlib.sha256(scene.frames.tobytes()).hexdigest(),
        })
        log.info("rendered %s (%s)", video_id, spec.kind)

    camera_map = {v["video_id"]: v["camera_id"] for v in videos}
    splits = build_splits(sorted(camera_map), camera_map, config.split_ratios, seed)
    save_splits(splits, out / "splits.json")
    cfg = asdict(config)
    cfg["split_ratios"] = list(config.split_ratios)
    manifest = {"seed": int(seed), "config": cfg, "videos": videos}
    manifest["manifest_hash"] = hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode()).hexdigest()
    with open(out / "corpus.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


