import json
from dataclasses import dataclass

from .annotations import DELIVERY, NON_DELIVERY
from .iou import event_track_iou

MANIFEST_SCHEMA_VERSION = 1


def assign_label(event, tracks, t_min=0.2, s_min=0.2):
    """Label an event delivery iff some delivery track passes both IoU thresholds.

    Returns ``(label, matched_track_ids)``; matched ids list every
    delivery-tagged track that passes, sorted.
    """
    matched = []
    for tr in tracks:
        if tr.tag != DELIVERY:
            continue
        t, s = event_track_iou(event, tr)
        if t >= t_min and s >= s_min:
            matched.append(tr.id)
    matched.sort()
    return (DELIVERY if matched else NON_DELIVERY), matched


@dataclass(frozen=True)
class LabeledEvent:
    event: object  # MotionEvent
    label: str
    matched_track_ids: tuple
    split: str
    camera_id: str

    @property
    def event_id(self):
        return self.event.event_id

    @property
    def video_id(self):
        return self.event.video_id

    def to_json(self):
        return {"event_id": self.event_id, "event": self.event.to_json(), "label": self.label,
                "matched_track_ids": list(self.matched_track_ids), "split": self.split,
                "camera_id": self.camera_id}

    @classmethod
    def from_json(cls, d):
        from ..motion.events import MotionEvent
        return cls(MotionEvent.from_json(d["event"]), d["label"],
                   tuple(d["matched_track_ids"]), d["split"], d["camera_id"])


def label_events(events_by_video, annotations, video_split, t_min=0.2, s_min=0.2):
    """Label every event of every annotated video; ``video_split`` maps video id -> split."""
    out = []
    for vid in sorted(events_by_video):
        ann = annotations[vid]
        for ev in events_by_video[vid]:
            label, matched = assign_label(ev, ann.tracks, t_min, s_min)
            out.append(LabeledEvent(ev, label, tuple(matched), video_split[vid], ann.camera_id))
    return out


def save_manifest(labeled, path, extra=None):
    doc = {"schema_version": MANIFEST_SCHEMA_VERSION,
           "events": [le.to_json() for le in labeled]}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_manifest(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValueError("unsupported labeled-event manifest")
    return [LabeledEvent.from_json(d) for d in doc["events"]]
