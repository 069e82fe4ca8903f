from .annotations import DELIVERY, NON_DELIVERY, PersonTrack, VideoAnnotation
from .clips import (AugmentConfig, ClipSample, flip_clip, jitter_span, letterbox,
                    sample_clip, sample_indices)
from .iou import event_track_iou, spatial_iou, temporal_iou
from .labeling import (LabeledEvent, assign_label, label_events, load_manifest,
                       save_manifest)
from .splits import build_splits, load_splits, save_splits, split_cameras

__all__ = [
    "DELIVERY", "NON_DELIVERY", "PersonTrack", "VideoAnnotation", "AugmentConfig",
    "ClipSample", "flip_clip", "jitter_span", "letterbox", "sample_clip", "sample_indices",
    "event_track_iou", "spatial_iou", "temporal_iou", "LabeledEvent", "assign_label",
    "label_events", "load_manifest", "save_manifest", "build_splits", "load_splits",
    "save_splits", "split_cameras",
]
