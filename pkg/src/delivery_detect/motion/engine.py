"""Streaming motion engine: background model -> blobs -> tracks -> events."""
from dataclasses import dataclass, field

import cv2
import numpy as np

from ..video import VideoSource, video_id_for
from .blobs import extract_blobs
from .events import DEFAULT_LADDER, EventsFile, trigger_events
from .mixture import MogConfig, PixelMixture, update_background
from .tracking import CentroidTracker


@dataclass(frozen=True)
class MotionConfig:
    mog: MogConfig = field(default_factory=MogConfig)
    proc_width: int = 320
    proc_height: int = 240
    min_area: int = 50
    max_match_dist: float = 50.0
    max_missed: int = 10
    active_time_min: int = 15
    variance_min: float = 100.0
    ladder: tuple = DEFAULT_LADDER
    max_event_seconds: float = 120.0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        mog = MogConfig(**d.pop("mog", {}))
        if "ladder" in d:
            d["ladder"] = tuple(d["ladder"])
        return cls(mog=mog, **d)


class MotionEngine:
    """Single-stream proposal generator.

    Blob and track coordinates are kept in native pixels; the background
    model runs at ``proc_width`` x ``proc_height`` (never upscaled).
    """

    def __init__(self, width, height, fps, config=None, video_id="", backend=None):
        self.config = config or MotionConfig()
        self.width, self.height = int(width), int(height)
        self.fps = float(fps)
        self.video_id = video_id
        self.backend = backend
        cfg = self.config
        self.proc_w = min(cfg.proc_width, self.width)
        self.proc_h = min(cfg.proc_height, self.height)
        self.sx = self.width / self.proc_w
        self.sy = self.height / self.proc_h
        self.model = PixelMixture(self.proc_h, self.proc_w, cfg.mog)
        self.tracker = CentroidTracker(cfg.max_match_dist, cfg.max_missed)
        self.max_event_len = max(1, int(round(cfg.max_event_seconds * self.fps)))
        self.frame_idx = -1

    def _gray(self, frame):
        frame = np.asarray(frame)
        if frame.ndim == 3:
            frame = cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY)
        if frame.shape != (self.height, self.width):
            raise ValueError(f"frame shape {frame.shape} != ({self.height}, {self.width})")
        if (self.proc_w, self.proc_h) != (self.width, self.height):
            frame = cv2.resize(frame, (self.proc_w, self.proc_h), interpolation=cv2.INTER_AREA)
        return frame

    def _trigger(self, tracks):
        cfg = self.config
        return trigger_events(tracks, cfg.active_time_min, cfg.variance_min,
                              (self.width, self.height), cfg.ladder, self.video_id)

    def _native(self, blob):
        b = blob.scaled(self.sx, self.sy)
        x0, y0, x1, y1 = b.bbox
        bbox = (int(np.floor(x0)), int(np.floor(y0)), int(np.ceil(x1)), int(np.ceil(y1)))
        return type(b)(b.id, bbox, b.centroid, b.area)

    def process(self, frame):
        """Consume one frame; return events completed at this frame."""
        self.frame_idx += 1
        mask = update_background(self.model, self._gray(frame), backend=self.backend)
        blobs = [self._native(b) for b in extract_blobs(mask, self.config.min_area, self.backend)]
        closed = self.tracker.update_tracks(blobs, self.frame_idx)
        events = self._trigger(closed)
        long_tracks = [t for t in self.tracker.tracks
                       if t.history and t.last_seen - t.first_seen + 1 >= self.max_event_len]
        if long_tracks:
            events += self._trigger(long_tracks)
            for t in long_tracks:
                t.restart()
        return events

    def flush(self):
        return self._trigger(self.tracker.flush())



def propose(frames, fps=10.0, config=None, video_id="", backend=None):
    """Run the engine over an in-memory frame sequence; events sorted by (start, end, track)."""
    frames = list(frames)
    if not frames:
        return []
    h, w = np.asarray(frames[0]).shape[:2]
    engine = MotionEngine(w, h, fps, config, video_id, backend)
    events = []
    for f in frames:
        events += engine.process(f)
    events += engine.flush()
    return sorted(events, key=lambda e: (e.start_frame, e.end_frame, e.track_ids))


def propose_video(path, config=None, video_id=None, backend=None):
    """Stream a video file or frame directory through the engine -> EventsFile."""
    src = VideoSource(path)
    vid = video_id or video_id_for(path)
    engine = MotionEngine(src.width, src.height, src.fps, config, vid, backend)
    events = []
    n = 0
    for f in src:
        events += engine.process(f)
        n += 1
    events += engine.flush()
    events.sort(key=lambda e: (e.start_frame, e.end_frame, e.track_ids))
    return EventsFile(vid, src.width, src.height, src.fps, n, events)
