import json

import numpy as np

SPLITS = ("train", "val", "test")


def split_cameras(cameras, ratios=(0.6, 0.2, 0.2), seed=0):
    """Shuffle camera ids with ``seed`` and cut them by ``ratios`` (each split non-empty)."""
    cams = sorted(set(cameras))
    if len(cams) < len(SPLITS):
        raise ValueError(f"need at least {len(SPLITS)} cameras, got {len(cams)}")
    r = np.asarray(ratios, dtype=float)
    if r.shape != (3,) or (r <= 0).any():
        raise ValueError("ratios must be three positive numbers")
    r = r / r.sum()
    n = len(cams)
    n_train = max(1, int(round(r[0] * n)))
    n_val = max(1, int(round(r[1] * n)))
    n_train = min(n_train, n - 2)
    n_val = min(n_val, n - n_train - 1)
    order = np.random.default_rng([int(seed), 2]).permutation(n)
    shuffled = [cams[i] for i in order]
    return {
        "train": sorted(shuffled[:n_train]),
        "val": sorted(shuffled[n_train:n_train + n_val]),
        "test": sorted(shuffled[n_train + n_val:]),
    }


def build_splits(items, camera_map, ratios=(0.6, 0.2, 0.2), seed=0):
    """Assign items (events or videos) to splits by camera so no camera spans two splits.

    Returns ``{"train": [...], "val": [...], "test": [...], "cameras": {split: [...]}}``.
    """
    missing = [i for i in items if i not in camera_map]
    if missing:
        raise ValueError(f"items without camera id: {missing[:5]}")
    cams = split_cameras([camera_map[i] for i in items], ratios, seed)
    where = {c: s for s, cs in cams.items() for c in cs}
    out = {s: [] for s in SPLITS}
    for i in sorted(items):
        out[where[camera_map[i]]].append(i)
    out["cameras"] = cams
    return out


def save_splits(splits, path):
    with open(path, "w") as fh:
        json.dump(splits, fh, indent=1, sort_keys=True)


def load_splits(path):
    with open(path) as fh:
        return json.load(fh)
