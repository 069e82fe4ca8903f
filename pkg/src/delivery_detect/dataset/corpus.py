"""On-disk dataset layout and the clip sets built from it.

A dataset directory holds::

    corpus.json               video list (id, camera, tag, path, fps, n_frames)
    videos/<id>.<ext>         footage
    annotations/<id>.json     person tracks (see ``annotations``)
    splits.json               camera-disjoint video splits
    events/<id>.json          motion proposals (written by ``propose``)
    labels.json               labeled-event manifest (written by ``label``)
"""
import json
import logging
from pathlib import Path

import numpy as np

from ..video import VideoSource
from .annotations import DELIVERY, VideoAnnotation
from .clips import AugmentConfig, EventFrames, sample_clip, sample_indices
from .labeling import load_manifest

log = logging.getLogger(__name__)


class Corpus:
    def __init__(self, root):
        self.root = Path(root)
        path = self.root / "corpus.json"
        if not path.exists():
            raise FileNotFoundError(f"{path} not found; not a dataset directory")
        with open(path) as fh:
            self.manifest = json.load(fh)
        self.videos = {v["video_id"]: v for v in self.manifest["videos"]}
        splits_path = self.root / "splits.json"
        if not splits_path.exists():
            raise FileNotFoundError(f"{splits_path} not found")
        with open(splits_path) as fh:
            self.splits = json.load(fh)
        self._split_of = {v: s for s in ("train", "val", "test") for v in self.splits.get(s, [])}
        self._ann = {}

    @property
    def events_dir(self):
        return self.root / "events"

    @property
    def labels_path(self):
        return self.root / "labels.json"

    def video_ids(self, split=None):
        if split is None:
            return sorted(self.videos)
        return sorted(self.splits[split])

    def split_of(self, video_id):
        return self._split_of[video_id]

    def video_path(self, video_id):
        return self.root / self.videos[video_id]["path"]

    def annotation(self, video_id):
        if video_id not in self._ann:
            self._ann[video_id] = VideoAnnotation.load(self.root / "annotations" / f"{video_id}.json")
        return self._ann[video_id]

    def labeled_events(self, split=None):
        if not self.labels_path.exists():
            raise FileNotFoundError(f"{self.labels_path} not found; run the labeling step first")
        events = load_manifest(self.labels_path)
        if split is not None:
            events = [e for e in events if e.split == split]
        return events


class EventClipSet:
    """Labeled events of one split as classifier clips.

    Frames are decoded once per video and kept as letterboxed thumbnail
    content. ``get(i, epoch)`` is deterministic in ``(seed, epoch, i)``.
    """

    def __init__(self, corpus, labeled, train_mode=False, seed=0, augment=AugmentConfig()):
        self.corpus = corpus
        self.items = list(labeled)
        self.train_mode = train_mode
        self.seed = int(seed)
        self.augment = augment
        self._cache = {}
        self._build_cache()

    def __len__(self):
        return len(self.items)

    def label(self, i):
        return int(self.items[i].label == DELIVERY)

    @property
    def labels(self):
        return [self.label(i) for i in range(len(self))]

    def _span(self, ev, n_frames):
        if self.train_mode:
            j = self.augment.temporal_jitter
            return range(max(0, ev.start_frame - j), min(n_frames - 1, ev.end_frame + j) + 1)
        return sample_indices(ev.start_frame, ev.end_frame)

    def _build_cache(self):
        by_video = {}
        for i, le in enumerate(self.items):
            by_video.setdefault(le.video_id, []).append(i)
        for vid in sorted(by_video):
            n_frames = self.corpus.videos[vid]["n_frames"]
            need = sorted(set().union(*(self._span(self.items[i].event, n_frames) for i in by_video[vid])))
            frames = VideoSource(self.corpus.video_path(vid)).read(need)
            for i in by_video[vid]:
                ev = self.items[i].event
                self._cache[i] = EventFrames(frames, ev, self._span(ev, n_frames))
        total = sum(c.nbytes for c in self._cache.values())
        log.info("cached %d event clips (%.1f MB)", len(self._cache), total / 2**20)

    def get(self, i, epoch=0):
        le = self.items[i]
        rng = np.random.default_rng([self.seed, int(epoch), int(i)])
        tracks = self.corpus.annotation(le.video_id).tracks
        return sample_clip(self._cache[i], le.event, tracks, train_mode=self.train_mode, rng=rng,
                           n_frames=self.corpus.videos[le.video_id]["n_frames"],
                           label=le.label, augment=self.augment)
