"""Per-video annotation files: person tracks with delivery tags.

Layout of ``annotations/<video_id>.json``::

    {"schema_version": 1, "video_id": str, "camera_id": str, "tag": "delivery"|"non-delivery",
     "width": int, "height": int, "fps": float, "n_frames": int,
     "tracks": [{"id": int, "tag": str, "boxes": {"<frame>": [x0, y0, x1, y1]}}],
     "events": [{"start_frame": int, "end_frame": int, "tag": str, "kind": str}]}

``events`` holds the ground-truth activity intervals.
"""
import json
from dataclasses import dataclass, field

DELIVERY = "delivery"
NON_DELIVERY = "non-delivery"
TAGS = (DELIVERY, NON_DELIVERY)
ANNOTATION_SCHEMA_VERSION = 1


@dataclass
class PersonTrack:
    id: int
    boxes: dict  # frame_idx -> (x0, y0, x1, y1), native pixels, half-open
    tag: str = NON_DELIVERY

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        self.boxes = {int(k): tuple(v) for k, v in sorted(self.boxes.items(), key=lambda kv: int(kv[0]))}

    @property
    def start_frame(self):
        return min(self.boxes)

    @property
    def end_frame(self):
        return max(self.boxes)

    def union_box(self, start=None, end=None):
        """Union of the boxes on frames in [start, end]; None when no frame qualifies."""
        sel = [b for f, b in self.boxes.items()
               if (start is None or f >= start) and (end is None or f <= end)]
        if not sel:
            return None
        return (min(b[0] for b in sel), min(b[1] for b in sel),
                max(b[2] for b in sel), max(b[3] for b in sel))

    def to_json(self):
        return {"id": self.id, "tag": self.tag,
                "boxes": {str(f): list(b) for f, b in self.boxes.items()}}

    @classmethod
    def from_json(cls, d):
        return cls(id=int(d["id"]), boxes=d["boxes"], tag=d["tag"])


@dataclass
class VideoAnnotation:
    video_id: str
    camera_id: str
    tag: str
    width: int
    height: int
    fps: float
    n_frames: int
    tracks: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def to_json(self):
        return {
            "schema_version": ANNOTATION_SCHEMA_VERSION,
            "video_id": self.video_id, "camera_id": self.camera_id, "tag": self.tag,
            "width": self.width, "height": self.height, "fps": self.fps,
            "n_frames": self.n_frames,
            "tracks": [t.to_json() for t in self.tracks],
            "events": list(self.events),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            video_id=d["video_id"], camera_id=str(d["camera_id"]), tag=d["tag"],
            width=int(d["width"]), height=int(d["height"]), fps=float(d["fps"]),
            n_frames=int(d["n_frames"]),
            tracks=[PersonTrack.from_json(t) for t in d.get("tracks", [])],
            events=list(d.get("events", [])),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))
