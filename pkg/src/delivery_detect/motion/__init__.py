from .blobs import Blob, extract_blobs
from .engine import MotionConfig, MotionEngine, propose, propose_video
from .events import (EventsFile, MotionEvent, crop_thumbnail, thumbnail_bbox,
                     trigger_events)
from .mixture import MogConfig, PixelMixture, update_background
from .tracking import CentroidTracker, Track, greedy_match

__all__ = [
    "Blob", "extract_blobs", "MotionConfig", "MotionEngine", "propose", "propose_video",
    "EventsFile", "MotionEvent", "crop_thumbnail", "thumbnail_bbox", "trigger_events",
    "MogConfig", "PixelMixture", "update_background", "CentroidTracker", "Track",
    "greedy_match",
]
