"""Corpus-wide steps shared by the command line and tests."""
import logging

from .dataset import label_events, save_manifest
from .dataset.corpus import Corpus
from .motion import EventsFile, propose_video

log = logging.getLogger(__name__)


def propose_corpus(corpus, motion_config=None, backend=None):
    """Write ``events/<video_id>.json`` for every video; returns {video_id: EventsFile}."""
    corpus.events_dir.mkdir(exist_ok=True)
    out = {}
    for vid in corpus.video_ids():
        ef = propose_video(corpus.video_path(vid), motion_config, vid, backend)
        ef.save(corpus.events_dir / f"{vid}.json")
        out[vid] = ef
        log.info("%s: %d events", vid, len(ef.events))
    return out


def load_events(corpus):
    if not corpus.events_dir.exists():
        raise FileNotFoundError(f"{corpus.events_dir} not found; run the proposal step first")
    return {vid: EventsFile.load(corpus.events_dir / f"{vid}.json").events
            for vid in corpus.video_ids()}


def label_corpus(corpus, t_min=0.2, s_min=0.2):
    """Label all proposed events and write ``labels.json``; returns the labeled events."""
    events = load_events(corpus)
    anns = {vid: corpus.annotation(vid) for vid in events}
    split = {vid: corpus.split_of(vid) for vid in events}
    labeled = label_events(events, anns, split, t_min, s_min)
    save_manifest(labeled, corpus.labels_path, {"t_min": t_min, "s_min": s_min})
    return labeled
