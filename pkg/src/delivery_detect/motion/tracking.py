"""Greedy nearest-centroid tracking of foreground blobs."""
import math
from dataclasses import dataclass, field


@dataclass
class Track:
    id: int
    history: list = field(default_factory=list)  # [(frame_idx, Blob)]
    missed: int = 0
    closed: bool = False
    # Welford accumulators over centroid positions
    _n: int = 0
    _mean_x: float = 0.0
    _mean_y: float = 0.0
    _m2_x: float = 0.0
    _m2_y: float = 0.0
    _anchor: tuple = None

    @property
    def first_seen(self):
        return self.history[0][0]

    @property
    def last_seen(self):
        return self.history[-1][0]

    @property
    def active_time(self):
        return self.last_seen - self.first_seen

    @property
    def centroid(self):
        if self.history:
            return self.history[-1][1].centroid
        return self._anchor

    @property
    def variance(self):
        """Population variance of the centroid, x plus y, in px^2."""
        if self._n == 0:
            return 0.0
        return (self._m2_x + self._m2_y) / self._n

    def add(self, frame_idx, blob):
        if self.history and frame_idx <= self.last_seen:
            raise ValueError("track history frames must strictly increase")
        self.history.append((frame_idx, blob))
        self.missed = 0
        cx, cy = blob.centroid
        self._n += 1
        dx = cx - self._mean_x
        dy = cy - self._mean_y
        self._mean_x += dx / self._n
        self._mean_y += dy / self._n
        self._m2_x += dx * (cx - self._mean_x)
        self._m2_y += dy * (cy - self._mean_y)

    def union_bbox(self):
        boxes = [b.bbox for _, b in self.history]
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    def restart(self):
        """Drop the history but keep the id, so the next match opens a new segment."""
        self._anchor = self.centroid
        self.history = []
        self._n = 0
        self._mean_x = self._mean_y = self._m2_x = self._m2_y = 0.0


def greedy_match(points_a, points_b, max_dist):
    """Pair points globally-closest-first; returns [(i, j)] with distance <= max_dist."""
    pairs = []
    for i, (ax, ay) in enumerate(points_a):
        for j, (bx, by) in enumerate(points_b):
            d = math.hypot(ax - bx, ay - by)
            if d <= max_dist:
                pairs.append((d, i, j))
    pairs.sort()
    used_a, used_b, out = set(), set(), []
    for _, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        out.append((i, j))
    return out


class CentroidTracker:
    def __init__(self, max_match_dist=50.0, max_missed=10):
        self.max_match_dist = max_match_dist
        self.max_missed = max_missed
        self.tracks = []
        self._next_id = 0
        self._last_frame = -1

    def update_tracks(self, blobs, frame_idx):
        """Assign ``blobs`` seen at ``frame_idx``; returns the tracks closed by this call."""
        if frame_idx <= self._last_frame:
            raise ValueError(f"frame_idx {frame_idx} is not after {self._last_frame}")
        self._last_frame = frame_idx

        live = [t for t in self.tracks if t.centroid is not None]
        pairs = greedy_match([t.centroid for t in live],
                             [b.centroid for b in blobs], self.max_match_dist)
        matched_tracks = set()
        matched_blobs = set()
        for i, j in pairs:
            live[i].add(frame_idx, blobs[j])
            matched_tracks.add(id(live[i]))
            matched_blobs.add(j)

        closed = []
        for t in self.tracks:
            if id(t) in matched_tracks:
                continue
            t.missed += 1
            if t.missed > self.max_missed:
                t.closed = True
                if t.history:
                    closed.append(t)
        self.tracks = [t for t in self.tracks if not t.closed]

        for j, blob in enumerate(blobs):
            if j not in matched_blobs:
                t = Track(self._next_id)
                self._next_id += 1
                t.add(frame_idx, blob)
                self.tracks.append(t)
        return closed

    def flush(self):
        """Close every live track (end of stream)."""
        out = [t for t in self.tracks if t.history]
        for t in self.tracks:
            t.closed = True
        self.tracks = []
        return out
