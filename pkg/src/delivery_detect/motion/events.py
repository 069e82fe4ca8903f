import json
import math
from dataclasses import asdict, dataclass, field

EVENTS_SCHEMA_VERSION = 1
DEFAULT_LADDER = (224, 480, 960)


@dataclass(frozen=True)
class MotionEvent:
    """A proposal: inclusive frame span plus region, all in native pixels."""

    start_frame: int
    end_frame: int
    roi: tuple
    thumbnail_bbox: tuple
    track_ids: tuple = ()
    video_id: str = ""
    variance: float = 0.0

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError("start_frame must not exceed end_frame")

    @property
    def event_id(self):
        return f"{self.video_id}:{self.start_frame}-{self.end_frame}:{'-'.join(map(str, self.track_ids))}"

    def to_json(self):
        d = asdict(self)
        d["roi"] = list(self.roi)
        d["thumbnail_bbox"] = list(self.thumbnail_bbox)
        d["track_ids"] = list(self.track_ids)
        return d

    @classmethod
    def from_json(cls, d):
        return cls(
            start_frame=int(d["start_frame"]),
            end_frame=int(d["end_frame"]),
            roi=tuple(d["roi"]),
            thumbnail_bbox=tuple(d["thumbnail_bbox"]),
            track_ids=tuple(d.get("track_ids", ())),
            video_id=d.get("video_id", ""),
            variance=float(d.get("variance", 0.0)),
        )


def _place(center, size, limit):
    if size >= limit:
        return 0, limit
    a = int(math.floor(center - size / 2 + 0.5))
    a = min(max(a, 0), limit - size)
    return a, a + size


def thumbnail_bbox(roi, frame_size, ladder=DEFAULT_LADDER):
    """Square crop from ``ladder`` covering ``roi``, centred on it and kept inside the frame.

    The smallest side that covers the roi's longer edge is used. A roi larger
    than every rung maps to the full frame; a side larger than one frame
    dimension is clipped to that dimension.
    """
    width, height = frame_size
    x0, y0, x1, y1 = roi
    need = max(x1 - x0, y1 - y0)
    sides = [s for s in sorted(ladder) if s >= need]
    if not sides:
        return (0, 0, width, height)
    side = sides[0]
    ax, bx = _place((x0 + x1) / 2, side, width)
    ay, by = _place((y0 + y1) / 2, side, height)
    return (ax, ay, bx, by)


def trigger_events(tracks, active_time_min=15, variance_min=100.0, frame_size=None,
                   ladder=DEFAULT_LADDER, video_id=""):
    """One event per track whose active time and centroid variance both pass."""
    events = []
    for t in tracks:
        if not t.history:
            continue
        if t.active_time < active_time_min or t.variance < variance_min:
            continue
        roi = t.union_bbox()
        if frame_size is None:
            thumb = roi
        else:
            clipped = (max(roi[0], 0), max(roi[1], 0),
                       min(roi[2], frame_size[0]), min(roi[3], frame_size[1]))
            thumb = thumbnail_bbox(clipped, frame_size, ladder)
        events.append(MotionEvent(
            start_frame=t.first_seen,
            end_frame=t.last_seen,
            roi=tuple(int(v) for v in roi),
            thumbnail_bbox=tuple(int(v) for v in thumb),
            track_ids=(t.id,),
            video_id=video_id,
            variance=float(t.variance),
        ))
    return events


def crop_thumbnail(frames, event):
    """Crop frames ``event.start_frame..end_frame`` to the event thumbnail."""
    if event.start_frame < 0 or event.end_frame >= len(frames):
        raise ValueError(
            f"event span [{event.start_frame}, {event.end_frame}] outside video of {len(frames)} frames")
    x0, y0, x1, y1 = event.thumbnail_bbox
    return [frames[i][y0:y1, x0:x1] for i in range(event.start_frame, event.end_frame + 1)]


@dataclass
class EventsFile:
    video_id: str
    width: int
    height: int
    fps: float
    n_frames: int
    events: list = field(default_factory=list)

    def to_json(self):
        return {
            "schema_version": EVENTS_SCHEMA_VERSION,
            "video_id": self.video_id,
            "width": self.width,
            "height": self.height,
            "fps": self.fps,
            "n_frames": self.n_frames,
            "events": [e.to_json() for e in self.events],
        }

    @classmethod
    def from_json(cls, d):
        if d.get("schema_version") != EVENTS_SCHEMA_VERSION:
            raise ValueError(f"unsupported events schema {d.get('schema_version')!r}")
        return cls(
            video_id=d["video_id"], width=d["width"], height=d["height"],
            fps=d["fps"], n_frames=d["n_frames"],
            events=[MotionEvent.from_json(e) for e in d["events"]],
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))
